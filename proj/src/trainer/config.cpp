#include "hlt/trainer/config.hpp"

#include <thread>

#include "hlt/errors.hpp"
#include "hlt/policy/group_io.hpp"
#include "hlt/util/json_fields.hpp"

namespace hlt::trainer {

using nlohmann::json;

void TrainConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("train config: " + msg); };
    if (total_steps < 0) fail("total_steps must be non-negative");
    if (episodes_per_step < 1) fail("episodes_per_step must be positive");
    if (eval_interval_episodes < 1) fail("eval_interval_episodes must be positive");
    if (eval_episodes < 1) fail("eval_episodes must be positive");
    if (!(p_f >= 0.0 && p_f < 1.0)) fail("p_f must lie in [0, 1)");
    if (league_capacity < 1) fail("league_capacity must be positive");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda must lie in [0, 1]");
    if (!(ppo.clip_eps > 0.0 && ppo.clip_eps < 1.0)) fail("clip_eps must lie in (0, 1)");
    if (!(ppo.dual_c > 1.0)) fail("dual_c must exceed 1");
    if (!(ppo.entropy_coef >= 0.0)) fail("entropy_coef must be non-negative");
    if (!(policy_lr > 0.0) || !(critic_lr > 0.0)) fail("learning rates must be positive");
    if (ppo_epochs < 1 || minibatches < 1) fail("ppo_epochs and minibatches must be positive");
    if (!(max_grad_norm > 0.0)) fail("max_grad_norm must be positive");
    if (critic_hidden < 1) fail("critic_hidden must be positive");
    if (workers < 0) fail("workers must be non-negative");
    arena.validate();
}

bool TrainConfig::is_boundary(int step) const {
    if (step < 1) return false;
    const auto before = static_cast<long long>(step - 1) * episodes_per_step;
    const auto after = static_cast<long long>(step) * episodes_per_step;
    return after / eval_interval_episodes > before / eval_interval_episodes;
}

int TrainConfig::resolved_workers() const {
    if (workers > 0) return workers;
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

TrainConfig train_config_from_json(const json& j) {
    const TrainConfig d;
    util::JsonReader r(j, "config");
    TrainConfig c;
    c.seed = r.optional<std::uint64_t>("seed", d.seed);
    c.total_steps = r.optional<int>("total_steps", d.total_steps);
    c.episodes_per_step = r.optional<int>("episodes_per_step", d.episodes_per_step);
    c.eval_interval_episodes = r.optional<int>("eval_interval_episodes", d.eval_interval_episodes);
    c.eval_episodes = r.optional<int>("eval_episodes", d.eval_episodes);
    c.p_f = r.optional<double>("p_f", d.p_f);
    c.league_capacity = r.optional<std::size_t>("league_capacity", d.league_capacity);
    c.gae_lambda = r.optional<double>("gae_lambda", d.gae_lambda);
    c.ppo.clip_eps = r.optional<double>("clip_eps", d.ppo.clip_eps);
    c.ppo.dual_c = r.optional<double>("dual_c", d.ppo.dual_c);
    c.ppo.entropy_coef = r.optional<double>("entropy_coef", d.ppo.entropy_coef);
    c.policy_lr = r.optional<double>("policy_lr", d.policy_lr);
    c.critic_lr = r.optional<double>("critic_lr", d.critic_lr);
    c.ppo_epochs = r.optional<int>("ppo_epochs", d.ppo_epochs);
    c.minibatches = r.optional<int>("minibatches", d.minibatches);
    c.max_grad_norm = r.optional<double>("max_grad_norm", d.max_grad_norm);
    c.critic_hidden = r.optional<std::size_t>("critic_hidden", d.critic_hidden);
    c.workers = r.optional<int>("workers", d.workers);
    c.record_wall_time = r.optional<bool>("record_wall_time", d.record_wall_time);
    if (const json* a = r.object("arena")) c.arena = arena::arena_config_from_json(*a);
    if (const json* n = r.object("network")) c.network = policy::network_from_json(*n);
    r.finish();
    c.validate();
    return c;
}

json train_config_to_json(const TrainConfig& c) {
    return {{"seed", c.seed},
            {"total_steps", c.total_steps},
            {"episodes_per_step", c.episodes_per_step},
            {"eval_interval_episodes", c.eval_interval_episodes},
            {"eval_episodes", c.eval_episodes},
            {"p_f", c.p_f},
            {"league_capacity", c.league_capacity},
            {"gae_lambda", c.gae_lambda},
            {"clip_eps", c.ppo.clip_eps},
            {"dual_c", c.ppo.dual_c},
            {"entropy_coef", c.ppo.entropy_coef},
            {"policy_lr", c.policy_lr},
            {"critic_lr", c.critic_lr},
            {"ppo_epochs", c.ppo_epochs},
            {"minibatches", c.minibatches},
            {"max_grad_norm", c.max_grad_norm},
            {"critic_hidden", c.critic_hidden},
            {"workers", c.workers},
            {"record_wall_time", c.record_wall_time},
            {"arena", arena::arena_config_to_json(c.arena)},
            {"network", policy::network_to_json(c.network)}};
}

}  // namespace hlt::trainer
