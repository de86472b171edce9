#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hlt::policy {

enum class PolicySource : std::uint8_t { frontier = 0, past = 1 };

/// Which policy each agent type runs for one episode. At most one type maps
/// to a past group, and only for the whole episode.
struct MixedAssignment {
    std::optional<int> selected_type;            ///< type running the past policy
    std::optional<std::size_t> past_index;       ///< league slot of that policy
    std::optional<std::uint64_t> past_version;   ///< version id expected at that slot
    std::vector<PolicySource> sources;           ///< one entry per type

    static MixedAssignment all_frontier(int num_types);
    static MixedAssignment with_past(int num_types, int type, std::size_t index, std::uint64_t version);

    int num_types() const noexcept { return static_cast<int>(sources.size()); }
    int past_type_count() const noexcept;
    bool is_frontier_only() const noexcept { return !selected_type.has_value(); }

    friend bool operator==(const MixedAssignment&, const MixedAssignment&) = default;
};

/// Agent-team information vector: F_v (policy-source values per type)
/// followed by F_delta (one-hot of the observing agent's type).
struct TeamInfo {
    std::vector<double> source_values;
    std::vector<double> type_one_hot;

    /// Hyper-network input, length 2 |types|.
    std::vector<double> concat() const;

    friend bool operator==(const TeamInfo&, const TeamInfo&) = default;
};

/// F_h for an agent running the frontier. Types on the frontier read 1; the
/// selected past type reads the selected group's omega. `omega` must be given
/// exactly when the assignment selects a past group and lie in [0, 1].
TeamInfo build_team_info(int type, const MixedAssignment& assignment, std::optional<double> omega);

/// F-hat_h: what a past (frozen) policy sees. Every source value is 1.
TeamInfo build_frozen_team_info(int type, int num_types);

/// Routing used during rollouts: agents whose type runs the past group see
/// F-hat_h, everyone else sees F_h for the assignment.
TeamInfo team_info_for_agent(int type, const MixedAssignment& assignment, std::optional<double> omega);

/// General form used when several types run past policies at once:
/// `source_values[j]` is 1 for frontier-run types and the group's omega otherwise.
TeamInfo team_info_from_values(int type, std::span<const double> source_values);

}  // namespace hlt::policy
