#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hlt/arena/arena.hpp"
#include "hlt/league/league.hpp"
#include "hlt/policy/policy_group.hpp"

namespace hlt::trainer {

/// Who controls each learner type for one episode and what its agents feed
/// their hyper-networks.
struct Lineup {
    std::vector<const policy::PolicyGroup*> per_type;
    std::vector<policy::TeamInfo> team_info;  ///< per type
    std::vector<double> source_values;        ///< F_v seen by frontier-run agents; also fed to the critic
    std::vector<bool> trainable;              ///< per type: samples enter the policy loss
};

/// Frontier-run types see F_v with `past_omega` at every past-run type;
/// past-run types see F-hat_h. With one past type this is exactly
/// build_team_info / build_frozen_team_info.
Lineup make_lineup(const policy::PolicyGroup& frontier, const policy::PolicyGroup* past,
                   std::optional<double> past_omega, const std::vector<policy::PolicySource>& sources);

/// Lineup for a sampled assignment; throws DanglingMemberError for stale references.
Lineup lineup_for_assignment(const policy::MixedAssignment& assignment, const policy::PolicyGroup& frontier,
                             const league::League& league);

struct AgentSample {
    int agent = 0;
    int type = 0;
    int action = 0;
    double log_prob = 0.0;
    num::ActionMask mask;
};

struct StepRecord {
    std::vector<double> team_obs;      ///< learner observations in id order, zeros for dead agents
    std::vector<AgentSample> samples;  ///< trainable agents alive at this step
    double reward = 0.0;
};

struct EpisodeRecord {
    std::uint64_t seed = 0;
    std::vector<StepRecord> steps;  ///< empty unless recorded
    arena::Outcome outcome = arena::Outcome::ongoing;
    double total_reward = 0.0;
    int length = 0;
    double entropy_sum = 0.0;  ///< over trainable agent decisions
    int decisions = 0;
};

/// Plays one episode: learner agents act through the lineup (stochastic
/// sampling), the opponent runs the scripted policy. All randomness derives
/// from `episode_seed`.
EpisodeRecord run_episode(const arena::ArenaConfig& config, const Lineup& lineup, std::uint64_t episode_seed,
                          bool record);

struct EvalResult {
    int episodes = 0;
    int wins = 0;
    int draws = 0;
    int losses = 0;
    double omega() const { return episodes > 0 ? static_cast<double>(wins) / episodes : 0.0; }
};

/// Seed of evaluation episode `index` in stream `stream_seed`.
std::uint64_t eval_episode_seed(std::uint64_t stream_seed, std::size_t index);

/// Win counts over `episodes` games of a fixed lineup; episode i uses
/// eval_episode_seed(stream_seed, i). Draws count as non-wins.
EvalResult evaluate_lineup(const arena::ArenaConfig& config, const Lineup& lineup, int episodes,
                           std::uint64_t stream_seed, int workers, std::vector<arena::Outcome>* outcomes = nullptr);

/// Omega of a group playing as a whole (frontier-frontier).
EvalResult evaluate_frontier(const policy::PolicyGroup& frontier, const arena::ArenaConfig& config, int episodes,
                             std::uint64_t stream_seed, int workers);

}  // namespace hlt::trainer
