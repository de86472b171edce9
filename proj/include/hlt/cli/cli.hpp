#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace hlt::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kRuntime = 2, kCorrupt = 3 };

/// Runs one subcommand. `args` excludes the program name.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Git blob id of `content`: SHA-1 over "blob <size>\0" followed by the bytes.
std::string git_blob_hash(const std::string& content);

/// run_dir/manifest.json; one per run directory.
struct RunManifest {
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    std::string config_hash;
    std::vector<std::string> artifacts;  ///< relative to the run directory
    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

void write_manifest(const std::filesystem::path& run_dir, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& run_dir);

/// Default directory for analysis output of a run: a sibling named
/// "<run>-analysis", so the run directory itself is never modified.
std::filesystem::path default_analysis_dir(const std::filesystem::path& run_dir);

}  // namespace hlt::cli
