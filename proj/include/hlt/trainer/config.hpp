#pragma once

#include <cstdint>

#include "hlt/arena/config.hpp"
#include "hlt/numkit/ppo.hpp"
#include "hlt/policy/policy_group.hpp"
#include "json.hpp"

namespace hlt::trainer {

/// Everything that determines a training run. The discount factor lives in
/// `arena.gamma`.
struct TrainConfig {
    std::uint64_t seed = 1;
    int total_steps = 200;
    int episodes_per_step = 128;        ///< M_em
    int eval_interval_episodes = 1600;  ///< M_st, counted in training episodes
    int eval_episodes = 160;
    double p_f = 0.1;
    std::size_t league_capacity = 5;
    double gae_lambda = 0.95;
    num::PpoCoefficients ppo;
    double policy_lr = 3e-4;
    double critic_lr = 3e-4;
    int ppo_epochs = 4;
    int minibatches = 4;
    double max_grad_norm = 0.5;
    std::size_t critic_hidden = 64;
    int workers = 0;                ///< 0 = all available cores; never changes results
    bool record_wall_time = false;  ///< off keeps metrics files byte-reproducible
    arena::ArenaConfig arena = arena::ArenaConfig::default_2u4m4k();
    policy::NetworkConfig network;

    /// Throws ConfigError naming the first invalid field.
    void validate() const;
    /// Training steps after which an evaluation boundary falls.
    bool is_boundary(int step) const;
    int resolved_workers() const;
};

/// Strict: unknown keys and wrong types raise ConfigError; missing keys keep
/// their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& c);

}  // namespace hlt::trainer
