#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hlt/arena/config.hpp"
#include "hlt/league/league.hpp"
#include "hlt/policy/policy_group.hpp"

namespace hlt::analysis {

inline constexpr double kZ95 = 1.959963984540054;

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

/// Wilson score interval for `wins` successes in `n` trials. n = 0 gives [0, 1].
Interval wilson_interval(int wins, int n, double z = kZ95);

struct AnalysisOptions {
    int episodes = 160;        ///< per league group (compat) or per cell (roles)
    double omega_below = 0.90; ///< groups with omega >= this are left out
    std::uint64_t seed = 1;
    int workers = 1;
    bool self_mix = true;      ///< prepend a frozen copy of the frontier as a control row
};

enum class CompatMode { exclusive, inclusive };
std::string to_string(CompatMode mode);
CompatMode compat_mode_from_string(const std::string& s);

/// One evaluation episode. `special_type` is the type on the minority side:
/// the past-run type (exclusive, roles) or the frontier-run type (inclusive).
struct RawEpisode {
    int row = 0;  ///< index into the report rows
    int special_type = 0;
    int episode = 0;
    std::uint64_t seed = 0;
    bool win = false;
};

struct CompatRow {
    std::uint64_t version = 0;
    double omega = 0.0;
    bool self_mix = false;
    int episodes = 0;
    int wins = 0;
    double win_rate() const { return episodes > 0 ? static_cast<double>(wins) / episodes : 0.0; }
    double improvement() const { return win_rate() - omega; }
    Interval interval() const { return wilson_interval(wins, episodes); }
};

struct CompatReport {
    CompatMode mode = CompatMode::exclusive;
    std::vector<std::string> type_names;
    std::vector<CompatRow> rows;  ///< self-mix row first when present, then league order
    std::vector<RawEpisode> raw;
};

struct RoleCell {
    int episodes = 0;
    int wins = 0;
    double win_rate() const { return episodes > 0 ? static_cast<double>(wins) / episodes : 0.0; }
    Interval interval() const { return wilson_interval(wins, episodes); }
};

struct RoleRow {
    std::uint64_t version = 0;
    double omega = 0.0;
    bool self_mix = false;
    std::vector<RoleCell> cells;  ///< one per type
};

struct RoleMatrix {
    std::vector<std::string> type_names;
    int frontier_episodes = 0;
    int frontier_wins = 0;
    std::vector<RoleRow> rows;
    std::vector<RawEpisode> raw;
    double frontier_omega() const {
        return frontier_episodes > 0 ? static_cast<double>(frontier_wins) / frontier_episodes : 0.0;
    }
    double decline(std::size_t row, std::size_t type) const { return frontier_omega() - rows[row].cells[type].win_rate(); }
};

struct EmptyLeagueError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Per episode one uniformly drawn type runs the past group, the rest run the
/// frontier. The self-mix row uses a frozen frontier copy whose omega is the
/// frontier's win rate on the same episode seeds.
CompatReport compat_exclusive(const policy::PolicyGroup& frontier, const league::League& league,
                              const arena::ArenaConfig& config, const AnalysisOptions& options);
/// Per episode one uniformly drawn type runs the frontier, the rest run the
/// past group.
CompatReport compat_inclusive(const policy::PolicyGroup& frontier, const league::League& league,
                              const arena::ArenaConfig& config, const AnalysisOptions& options);
CompatReport compat(CompatMode mode, const policy::PolicyGroup& frontier, const league::League& league,
                    const arena::ArenaConfig& config, const AnalysisOptions& options);

/// Every (group, type) cell forces that type onto the past group.
RoleMatrix role_matrix(const policy::PolicyGroup& frontier, const league::League& league,
                       const arena::ArenaConfig& config, const AnalysisOptions& options);

// Files written by export_report:
//   compat_<mode>_raw.csv, compat_<mode>.csv, compat_<mode>.svg
//   roles_raw.csv, roles.csv, roles.svg
// The figure is skipped when there are no rows.
std::vector<std::filesystem::path> export_report(const CompatReport& report, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> export_report(const RoleMatrix& matrix, const std::filesystem::path& out_dir);

/// Readers for the aggregate CSVs; raw episodes are not restored. Throw
/// CorruptArtifactError on malformed input.
CompatReport read_compat_csv(const std::filesystem::path& path);
RoleMatrix read_roles_csv(const std::filesystem::path& path);
/// Raw episodes of either report kind.
std::vector<RawEpisode> read_raw_csv(const std::filesystem::path& path);

std::string compat_svg(const CompatReport& report);
std::string roles_svg(const RoleMatrix& matrix);
/// Omega history of a training run against the optimization step.
std::string omega_curve_svg(const std::vector<std::pair<int, double>>& history, int total_steps);

}  // namespace hlt::analysis
