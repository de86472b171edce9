#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hlt/numkit/rng.hpp"
#include "hlt/policy/policy_group.hpp"
#include "hlt/policy/team_info.hpp"

namespace hlt::league {

struct LeagueMember {
    policy::PolicyGroup group;
    double omega = 0.0;
    std::uint64_t admitted_at_step = 0;
};

enum class AdmitStatus : std::uint8_t { accepted, accepted_with_eviction, rejected };

struct AdmitResult {
    AdmitStatus status = AdmitStatus::accepted;
    std::optional<std::uint64_t> evicted_version;  ///< set for accepted_with_eviction and rejected

    friend bool operator==(const AdmitResult&, const AdmitResult&) = default;
};

/// Audit trail of every offer made to the league.
struct AdmissionRecord {
    std::uint64_t step = 0;
    std::uint64_t candidate_version = 0;
    double omega = 0.0;
    AdmitResult result;

    friend bool operator==(const AdmissionRecord&, const AdmissionRecord&) = default;
};

struct DanglingMemberError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// Capacity-bounded pool of frozen policy groups kept sorted by ascending omega.
class League {
public:
    explicit League(std::size_t capacity = 5);

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return members_.size(); }
    bool empty() const noexcept { return members_.empty(); }
    const std::vector<LeagueMember>& members() const noexcept { return members_; }
    const LeagueMember& member(std::size_t index) const;
    const std::vector<AdmissionRecord>& history() const noexcept { return history_; }

    /// League filter. Below capacity the candidate is inserted. At capacity it
    /// is inserted provisionally, the adjacent pair with the smallest omega gap
    /// is found (lowest-omega pair on ties, gaps within 1e-12 tie), and the newer member of that pair
    /// is removed. Throws std::invalid_argument for unfrozen candidates or
    /// omega outside [0, 1].
    AdmitResult try_admit(policy::PolicyGroup candidate, double omega, std::uint64_t step = 0);

    /// Used when restoring from a checkpoint.
    static League restore(std::size_t capacity, std::vector<LeagueMember> members,
                          std::vector<AdmissionRecord> history);

private:
    std::size_t capacity_;
    std::vector<LeagueMember> members_;
    std::vector<AdmissionRecord> history_;
};

/// League sampler output: nullopt is frontier-frontier, otherwise the index
/// of the past group paired with the frontier.
struct Combination {
    std::optional<std::size_t> past_index;

    bool frontier_frontier() const noexcept { return !past_index.has_value(); }
    friend bool operator==(const Combination&, const Combination&) = default;
};

/// P(frontier-frontier) = p_f and P(past l) = (1 - p_f) / |L|; an empty league
/// always yields frontier-frontier. Requires 0 <= p_f < 1.
Combination sample_combination(const League& league, double p_f, num::Rng& rng);

/// Frontier-frontier maps to an all-frontier assignment; otherwise one type,
/// uniform over the types regardless of agent counts, runs the past group.
policy::MixedAssignment sample_assignment(const Combination& combination, const League& league, int num_types,
                                          num::Rng& rng);

/// Policy group each type runs for one episode.
struct MixedPolicy {
    std::vector<const policy::PolicyGroup*> per_type;
    std::vector<policy::PolicySource> sources;
    std::optional<double> selected_omega;
};

/// Throws DanglingMemberError when the assignment names a slot that is gone
/// or now holds a different version.
MixedPolicy compose_mixed(const policy::MixedAssignment& assignment, const policy::PolicyGroup& frontier,
                          const League& league);

}  // namespace hlt::league
