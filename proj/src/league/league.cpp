#include "hlt/league/league.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hlt::league {

namespace {
// Gaps this close count as ties, so 0.45 - 0.4 and 0.95 - 0.9 compare equal.
constexpr double kGapTieTolerance = 1e-12;
}  // namespace

League::League(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("league capacity must be positive");
}

const LeagueMember& League::member(std::size_t index) const {
    if (index >= members_.size()) {
        throw DanglingMemberError("league slot " + std::to_string(index) + " does not exist (size " +
                                  std::to_string(members_.size()) + ")");
    }
    return members_[index];
}

AdmitResult League::try_admit(policy::PolicyGroup candidate, double omega, std::uint64_t step) {
    if (!candidate.frozen()) throw std::invalid_argument("league candidates must be frozen");
    if (!(omega >= 0.0 && omega <= 1.0)) throw std::invalid_argument("omega outside [0, 1]");
    const std::uint64_t candidate_version = candidate.version();

    // Stable insert keeps equal-omega members in admission order.
    auto pos = std::upper_bound(members_.begin(), members_.end(), omega,
                                [](double w, const LeagueMember& m) { return w < m.omega; });
    members_.insert(pos, LeagueMember{std::move(candidate), omega, step});

    AdmitResult result{AdmitStatus::accepted, std::nullopt};
    if (members_.size() > capacity_) {
        std::size_t best = 0;
        double best_gap = std::abs(members_[1].omega - members_[0].omega);
        for (std::size_t k = 1; k + 1 < members_.size(); ++k) {
            const double gap = std::abs(members_[k + 1].omega - members_[k].omega);
            if (gap < best_gap - kGapTieTolerance) {
                best = k;
                best_gap = gap;
            }
        }
        const std::size_t newer =
            members_[best + 1].group.version() > members_[best].group.version() ? best + 1 : best;
        const std::uint64_t evicted = members_[newer].group.version();
        members_.erase(members_.begin() + static_cast<std::ptrdiff_t>(newer));
        result = {evicted == candidate_version ? AdmitStatus::rejected : AdmitStatus::accepted_with_eviction, evicted};
    }
    history_.push_back({step, candidate_version, omega, result});
    return result;
}

League League::restore(std::size_t capacity, std::vector<LeagueMember> members, std::vector<AdmissionRecord> history) {
    League l(capacity);
    if (members.size() > capacity) throw std::invalid_argument("restored league exceeds its capacity");
    for (std::size_t k = 0; k < members.size(); ++k) {
        if (!members[k].group.frozen()) throw std::invalid_argument("restored league member is not frozen");
        if (k > 0 && members[k].omega < members[k - 1].omega) {
            throw std::invalid_argument("restored league is not sorted by omega");
        }
    }
    l.members_ = std::move(members);
    l.history_ = std::move(history);
    return l;
}

Combination sample_combination(const League& league, double p_f, num::Rng& rng) {
    if (!(p_f >= 0.0 && p_f < 1.0)) throw std::invalid_argument("p_f must lie in [0, 1)");
    if (league.empty()) return {};
    const double u = num::uniform01(rng);
    if (u < p_f) return {};
    const auto n = league.size();
    auto index = static_cast<std::size_t>((u - p_f) / (1.0 - p_f) * static_cast<double>(n));
    return {std::min(index, n - 1)};
}

policy::MixedAssignment sample_assignment(const Combination& combination, const League& league, int num_types,
                                          num::Rng& rng) {
    if (num_types < 1) throw std::invalid_argument("sample_assignment: no agent types");
    if (combination.frontier_frontier()) return policy::MixedAssignment::all_frontier(num_types);
    const auto& member = league.member(*combination.past_index);
    const int type = static_cast<int>(rng() % static_cast<std::uint64_t>(num_types));
    return policy::MixedAssignment::with_past(num_types, type, *combination.past_index, member.group.version());
}

MixedPolicy compose_mixed(const policy::MixedAssignment& assignment, const policy::PolicyGroup& frontier,
                          const League& league) {
    if (assignment.num_types() != frontier.num_types()) {
        throw std::invalid_argument("assignment and frontier disagree on the number of types");
    }
    MixedPolicy mixed;
    mixed.per_type.assign(static_cast<std::size_t>(frontier.num_types()), &frontier);
    mixed.sources = assignment.sources;
    if (assignment.selected_type) {
        const auto& member = league.member(assignment.past_index.value());
        if (assignment.past_version && member.group.version() != *assignment.past_version) {
            throw DanglingMemberError("league slot " + std::to_string(*assignment.past_index) + " now holds version " +
                                      std::to_string(member.group.version()) + ", not " +
                                      std::to_string(*assignment.past_version));
        }
        mixed.per_type[static_cast<std::size_t>(*assignment.selected_type)] = &member.group;
        mixed.selected_omega = member.omega;
    }
    return mixed;
}

}  // namespace hlt::league
