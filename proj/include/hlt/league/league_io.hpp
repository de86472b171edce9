#pragma once

#include <filesystem>

#include "hlt/league/league.hpp"
#include "hlt/numkit/tensor_io.hpp"
#include "json.hpp"

namespace hlt::league {

/// `dir/league.json` lists capacity, members (version, omega, admission step,
/// checkpoint path) and the admission history; each member is saved with
/// save_group under `dir/member_v<version>/`.
void save_league(const std::filesystem::path& dir, const League& league, num::DType dtype = num::DType::f64);

/// Throws CorruptArtifactError when the manifest or a member checkpoint is
/// unreadable or inconsistent.
League load_league(const std::filesystem::path& dir);

nlohmann::json league_manifest(const League& league);
std::string_view to_string(AdmitStatus s) noexcept;

}  // namespace hlt::league
