#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "hlt/league/league.hpp"
#include "hlt/numkit/adam.hpp"
#include "hlt/trainer/config.hpp"
#include "hlt/trainer/critic.hpp"
#include "hlt/trainer/rollout.hpp"

namespace hlt::trainer {

inline constexpr int kCheckpointFormatVersion = 1;

struct StepStats {
    int step = 0;
    long long episodes = 0;  ///< training episodes completed after this step
    std::optional<double> omega;  ///< set on evaluation boundaries
    std::vector<double> policy_loss;  ///< per type, mean per-sample loss over all updates
    double value_loss = 0.0;
    double entropy = 0.0;  ///< mean policy entropy of trainable decisions during collection
    std::size_t league_size = 0;
    double wall_ms = 0.0;
    int frontier_only_episodes = 0;
    int rollout_wins = 0;
    std::optional<league::AdmitResult> admission;
};

/// One Adam state per trunk, one per type's hyper-networks, one for the critic.
struct OptimizerState {
    std::vector<num::AdamState> trunks;
    std::vector<num::AdamState> types;
    num::AdamState critic;
    friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

/// Frontier, critic, league and optimizer state of one run, advanced one
/// optimization step at a time. Every random draw is derived from
/// (seed, step, episode) coordinates, so a run resumed from a checkpoint
/// continues exactly like an uninterrupted one.
class Trainer {
public:
    explicit Trainer(TrainConfig config);

    const TrainConfig& config() const noexcept { return config_; }
    int steps_done() const noexcept { return steps_done_; }
    long long episodes_done() const noexcept { return static_cast<long long>(steps_done_) * config_.episodes_per_step; }
    const policy::PolicyGroup& frontier() const noexcept { return frontier_; }
    const CriticNet& critic() const noexcept { return critic_; }
    const league::League& league() const noexcept { return league_; }
    const OptimizerState& optimizer() const noexcept { return optim_; }
    /// (step, omega) at every boundary so far.
    const std::vector<std::pair<int, double>>& omega_history() const noexcept { return omega_history_; }

    /// Worker count is a pure performance knob and may change between steps.
    void set_workers(int workers) { config_.workers = workers; }
    void set_total_steps(int steps) { config_.total_steps = steps; }

    /// Collect M_em episodes, update frontier and critic, then on a boundary
    /// evaluate, freeze a copy and offer it to the league.
    StepStats step();

    /// Writes the full state to `dir` (created; existing files replaced).
    void save_checkpoint(const std::filesystem::path& dir) const;
    /// Throws CorruptArtifactError for missing files, bad headers or an
    /// unknown format version.
    static Trainer load_checkpoint(const std::filesystem::path& dir);

private:
    Trainer(TrainConfig config, policy::PolicyGroup frontier, CriticNet critic, league::League league,
            OptimizerState optim, int steps_done, std::vector<std::pair<int, double>> omega_history);

    TrainConfig config_;
    policy::PolicyGroup frontier_;
    CriticNet critic_;
    league::League league_;
    OptimizerState optim_;
    int steps_done_ = 0;
    std::vector<std::pair<int, double>> omega_history_;
};

/// Group shape of the learner team for an arena config.
policy::GroupShape learner_shape(const arena::ArenaConfig& config);

/// Seed stream of the boundary evaluation after `step`.
std::uint64_t boundary_eval_seed(std::uint64_t run_seed, int step);

}  // namespace hlt::trainer
