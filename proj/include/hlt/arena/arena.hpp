#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hlt/arena/config.hpp"
#include "hlt/numkit/sampling.hpp"

namespace hlt::arena {

/// Team 0 is the learner, team 1 the scripted opponent.
enum class Team : std::uint8_t { learner = 0, opponent = 1 };

enum class Outcome : std::uint8_t { ongoing = 0, win = 1, loss = 2, draw = 3 };

std::string_view to_string(Outcome o) noexcept;

/// Win and loss exchanged; draw and ongoing unchanged.
Outcome swap_perspective(Outcome o) noexcept;

/// Shared discrete action space:
///   0 no-op | 1 forward | 2 back | 3 up | 4 down | 5..5+K-1 attack slot k | 5+K repair
/// Forward points toward the enemy spawn side, so both teams use the same
/// encoding under the mirror transform. Attack slot k targets the k-th
/// nearest living visible enemy (Chebyshev distance, ties by id).
namespace action {
inline constexpr int kNoop = 0;
inline constexpr int kForward = 1;
inline constexpr int kBack = 2;
inline constexpr int kUp = 3;
inline constexpr int kDown = 4;
inline constexpr int kFirstAttack = 5;
}  // namespace action

struct AgentState {
    int id = 0;
    int type = 0;
    Team team = Team::learner;
    int x = 0;
    int y = 0;
    int hp = 0;
    bool alive = true;

    friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct ArenaState {
    std::vector<AgentState> agents;  ///< learner agents first, then opponents; roster order inside a team
    int step = 0;
    Outcome outcome = Outcome::ongoing;  ///< from the learner's perspective

    friend bool operator==(const ArenaState&, const ArenaState&) = default;
};

using Observation = std::vector<double>;

struct StepResult {
    std::vector<Observation> observations;
    double reward = 0.0;  ///< learner team reward
    bool done = false;
    Outcome outcome = Outcome::ongoing;
};

/// Episode-level analytic reward bounds for the learner team.
struct RewardBounds {
    double min = 0.0;
    double max = 0.0;
};

class IllegalActionError : public std::runtime_error {
public:
    IllegalActionError(int agent_id, const std::string& reason)
        : std::runtime_error("agent " + std::to_string(agent_id) + ": " + reason), agent_id_(agent_id) {}
    int agent_id() const noexcept { return agent_id_; }

private:
    int agent_id_;
};

/// Two-team heterogeneous grid battle.
///
/// Each step resolves simultaneously: all moves, then all attacks (damage
/// summed and applied at once, targets fixed from the pre-move state), then
/// repairs by surviving support units. The episode ends when a team is wiped
/// out or at `max_steps`, where the higher remaining total HP wins.
class Arena {
public:
    explicit Arena(ArenaConfig config);

    const ArenaConfig& config() const noexcept { return config_; }
    const ArenaState& state() const noexcept { return state_; }

    /// Mirrored spawn with seed-dependent row jitter; returns every agent's observation.
    std::vector<Observation> reset(std::uint64_t seed);

    /// Replaces the state (scenario setup in tests and analysis tools). The
    /// state is validated against the config.
    void set_state(ArenaState state);

    /// `joint_actions` is indexed by agent id; entries of dead agents are ignored.
    /// Throws IllegalActionError for the first agent whose action is masked.
    StepResult step(std::span<const int> joint_actions);

    num::ActionMask legal_actions(int agent_id) const;

    /// Built-in opponent: repair the most damaged ally in reach, else attack
    /// the lowest-HP legal target, else close on the nearest visible enemy
    /// (support units follow the ground-unit centroid instead), else advance
    /// toward the enemy side. `seed` breaks ties between equal-length axes.
    std::vector<int> scripted_actions(Team team, std::uint64_t seed) const;

    Observation observe(int agent_id) const;
    std::vector<Observation> observe_all() const;

    std::size_t obs_dim() const noexcept { return obs_dim_; }
    int num_actions() const noexcept { return action::kFirstAttack + config_.attack_slots + 1; }
    int repair_action() const noexcept { return action::kFirstAttack + config_.attack_slots; }
    int num_agents() const noexcept { return 2 * config_.team_size(); }
    int team_size() const noexcept { return config_.team_size(); }

    /// Living enemies of `agent_id` in attack-slot order.
    std::vector<int> enemy_slots(int agent_id) const;

    /// FNV-1a over every agent field and the step counter.
    std::uint64_t state_hash() const noexcept;

private:
    int chebyshev(const AgentState& a, const AgentState& b) const noexcept;
    bool visible(const AgentState& from, const AgentState& to) const noexcept;
    int repair_target(int agent_id) const;
    int forward_dx(Team team) const noexcept { return team == Team::learner ? 1 : -1; }
    int move_toward(const AgentState& agent, int tx, int ty, std::uint64_t seed) const;
    bool can_move(const AgentState& agent, int action) const noexcept;

    ArenaConfig config_;
    ArenaState state_;
    std::size_t obs_dim_ = 0;
};

/// N agents = 2 x roster total.
ArenaState mirror_state(const ArenaState& state, const ArenaConfig& config);

RewardBounds reward_bounds(const ArenaConfig& config);

/// Affine map of an episode's total learner reward onto [0, 1], clamped.
/// Throws ConfigError when the analytic bounds coincide.
double normalized_reward(double total_reward, const RewardBounds& bounds);
double normalized_reward(double total_reward, const ArenaConfig& config);

}  // namespace hlt::arena
