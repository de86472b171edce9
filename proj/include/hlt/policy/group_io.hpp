#pragma once

#include <filesystem>

#include "hlt/numkit/tensor_io.hpp"
#include "hlt/policy/policy_group.hpp"
#include "json.hpp"

namespace hlt::policy {

inline constexpr int kGroupFormatVersion = 1;

/// Writes `dir/manifest.json` plus one tensor file per parameter. The
/// directory is created if needed; existing files with the same names are replaced.
void save_group(const std::filesystem::path& dir, const PolicyGroup& group, num::DType dtype = num::DType::f64);

/// Throws CorruptArtifactError on a missing/garbled manifest, an unknown format
/// version, or tensors whose shapes disagree with the manifest.
PolicyGroup load_group(const std::filesystem::path& dir);

nlohmann::json network_to_json(const NetworkConfig& n);
NetworkConfig network_from_json(const nlohmann::json& j);

}  // namespace hlt::policy
