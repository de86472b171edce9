#include "hlt/trainer/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "hlt/errors.hpp"
#include "hlt/league/league_io.hpp"
#include "hlt/policy/group_io.hpp"
#include "hlt/trainer/parallel.hpp"

namespace hlt::trainer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kPolicyChunk = 256;
constexpr std::size_t kCriticChunk = 128;

// Stream tags for derive_rng / derive_seed.
constexpr std::uint64_t kInitStream = 0x1;
constexpr std::uint64_t kSamplerStream = 0x5a;
constexpr std::uint64_t kEpisodeStream = 0xe9;
constexpr std::uint64_t kShuffleStream = 0x0b;
constexpr std::uint64_t kEvalStream = 0xe7;

struct TimestepRef {
    std::uint32_t episode = 0;
    std::uint32_t step = 0;
    double ret = 0.0;
    std::size_t first_sample = 0;
    std::size_t sample_count = 0;
};

struct SampleRef {
    std::uint32_t episode = 0;
    std::uint32_t step = 0;
    std::uint32_t sample = 0;
    std::uint32_t key = 0;
    double advantage = 0.0;
};

std::vector<std::span<const double>> to_const(const std::vector<std::span<double>>& spans) {
    return {spans.begin(), spans.end()};
}

std::vector<std::span<double>> hyper_params(policy::PolicyGroup& group, int type) {
    std::vector<std::span<double>> out;
    for (auto& h : group.mutable_type(type).hypernets) {
        for (auto p : h.parameters()) out.push_back(p);
    }
    return out;
}

std::vector<std::span<double>> hyper_grads(policy::TypeGrads& g) {
    std::vector<std::span<double>> out;
    for (auto& h : g.hypernets) {
        for (auto p : h.spans()) out.push_back(p);
    }
    return out;
}

OptimizerState fresh_optimizer(policy::PolicyGroup& frontier, CriticNet& critic, const TrainConfig& config) {
    OptimizerState o;
    const num::AdamConfig policy_cfg{config.policy_lr};
    for (std::size_t t = 0; t < frontier.trunks().size(); ++t) {
        o.trunks.push_back(num::AdamState::for_parameters(frontier.mutable_trunk(t).parameters(), policy_cfg));
    }
    for (int j = 0; j < frontier.num_types(); ++j) {
        o.types.push_back(num::AdamState::for_parameters(hyper_params(frontier, j), policy_cfg));
    }
    o.critic = num::AdamState::for_parameters(critic.mlp.parameters(), {config.critic_lr});
    return o;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptArtifactError("missing " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw CorruptArtifactError("malformed " + path.string() + ": " + e.what());
    }
}

void save_adam(const fs::path& dir, const std::string& prefix, const num::AdamState& s) {
    for (std::size_t k = 0; k < s.m.size(); ++k) {
        num::save_tensor(dir / (prefix + "_b" + std::to_string(k) + "_m.hltt"), num::Tensor::vector(s.m[k]),
                         num::DType::f64);
        num::save_tensor(dir / (prefix + "_b" + std::to_string(k) + "_v.hltt"), num::Tensor::vector(s.v[k]),
                         num::DType::f64);
    }
}

void load_adam(const fs::path& dir, const std::string& prefix, num::AdamState& s, std::uint64_t t) {
    for (std::size_t k = 0; k < s.m.size(); ++k) {
        const auto m = num::load_tensor(dir / (prefix + "_b" + std::to_string(k) + "_m.hltt"));
        const auto v = num::load_tensor(dir / (prefix + "_b" + std::to_string(k) + "_v.hltt"));
        if (m.size() != s.m[k].size() || v.size() != s.v[k].size()) {
            throw CorruptArtifactError("optimizer block " + prefix + " " + std::to_string(k) + " has the wrong size");
        }
        s.m[k].assign(m.data().begin(), m.data().end());
        s.v[k].assign(v.data().begin(), v.data().end());
    }
    s.t = t;
}

}  // namespace

policy::GroupShape learner_shape(const arena::ArenaConfig& config) {
    const arena::Arena probe(config);
    policy::GroupShape shape;
    for (const auto& t : config.roster) shape.type_names.push_back(t.name);
    shape.obs_dim = probe.obs_dim();
    shape.num_actions = static_cast<std::size_t>(probe.num_actions());
    return shape;
}

std::uint64_t boundary_eval_seed(std::uint64_t run_seed, int step) {
    return num::derive_seed({run_seed, kEvalStream, static_cast<std::uint64_t>(step)});
}

Trainer::Trainer(TrainConfig config) : config_(std::move(config)), league_(config_.league_capacity) {
    config_.validate();
    num::Rng rng = num::derive_rng({config_.seed, kInitStream});
    const auto shape = learner_shape(config_.arena);
    frontier_ = policy::PolicyGroup::create(shape, config_.network, rng);
    critic_ = CriticNet::create(
        critic_input_dim(static_cast<std::size_t>(config_.arena.team_size()), shape.obs_dim, shape.type_names.size()),
        config_.critic_hidden, rng);
    optim_ = fresh_optimizer(frontier_, critic_, config_);
}

Trainer::Trainer(TrainConfig config, policy::PolicyGroup frontier, CriticNet critic, league::League league,
                 OptimizerState optim, int steps_done, std::vector<std::pair<int, double>> omega_history)
    : config_(std::move(config)),
      frontier_(std::move(frontier)),
      critic_(std::move(critic)),
      league_(std::move(league)),
      optim_(std::move(optim)),
      steps_done_(steps_done),
      omega_history_(std::move(omega_history)) {}

StepStats Trainer::step() {
    const auto started = std::chrono::steady_clock::now();
    const int step = steps_done_ + 1;
    const int workers = config_.resolved_workers();
    const auto M = static_cast<std::size_t>(config_.episodes_per_step);
    const int types = frontier_.num_types();
    const std::size_t obs_dim = frontier_.shape().obs_dim;

    StepStats stats;
    stats.step = step;

    // Assignments are drawn sequentially so the sampler stream is independent of workers.
    num::Rng sampler = num::derive_rng({config_.seed, kSamplerStream, static_cast<std::uint64_t>(step)});
    std::vector<Lineup> lineups;
    lineups.reserve(M);
    for (std::size_t e = 0; e < M; ++e) {
        const auto combination = league::sample_combination(league_, config_.p_f, sampler);
        const auto assignment = league::sample_assignment(combination, league_, types, sampler);
        stats.frontier_only_episodes += assignment.is_frontier_only() ? 1 : 0;
        lineups.push_back(lineup_for_assignment(assignment, frontier_, league_));
    }

    std::vector<EpisodeRecord> episodes(M);
    const auto first_episode = static_cast<std::uint64_t>(episodes_done());
    parallel_for(M, workers, [&](std::size_t e) {
        const auto seed = num::derive_seed({config_.seed, kEpisodeStream, first_episode + e});
        try {
            episodes[e] = run_episode(config_.arena, lineups[e], seed, true);
        } catch (const std::exception& ex) {
            throw std::runtime_error("episode " + std::to_string(first_episode + e) + ": " + ex.what());
        }
    });

    // Flatten timesteps and trainable samples; identical F_h vectors share a key.
    std::vector<TimestepRef> timesteps;
    std::vector<SampleRef> samples;
    std::map<std::vector<double>, std::uint32_t> key_index;
    std::vector<std::vector<double>> key_table;
    double entropy_sum = 0.0;
    long long decisions = 0;
    for (std::size_t e = 0; e < M; ++e) {
        const auto& ep = episodes[e];
        stats.rollout_wins += ep.outcome == arena::Outcome::win ? 1 : 0;
        entropy_sum += ep.entropy_sum;
        decisions += ep.decisions;
        std::vector<std::uint32_t> keys(static_cast<std::size_t>(types));
        for (int j = 0; j < types; ++j) {
            auto fh = lineups[e].team_info[static_cast<std::size_t>(j)].concat();
            auto [it, inserted] = key_index.try_emplace(fh, static_cast<std::uint32_t>(key_table.size()));
            if (inserted) key_table.push_back(std::move(fh));
            keys[static_cast<std::size_t>(j)] = it->second;
        }
        for (std::size_t t = 0; t < ep.steps.size(); ++t) {
            TimestepRef ref{static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(t), 0.0, samples.size(),
                            ep.steps[t].samples.size()};
            for (std::size_t k = 0; k < ep.steps[t].samples.size(); ++k) {
                const auto type = static_cast<std::size_t>(ep.steps[t].samples[k].type);
                samples.push_back({ref.episode, ref.step, static_cast<std::uint32_t>(k), keys[type], 0.0});
            }
            timesteps.push_back(ref);
        }
    }
    stats.entropy = decisions > 0 ? entropy_sum / static_cast<double>(decisions) : 0.0;

    const std::size_t critic_dim = critic_.input_dim();
    auto critic_batch = [&](std::span<const std::size_t> rows) {
        num::Tensor x({rows.size(), critic_dim});
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto& ts = timesteps[rows[r]];
            fill_critic_input(episodes[ts.episode].steps[ts.step].team_obs, lineups[ts.episode].source_values,
                              x.data().subspan(r * critic_dim, critic_dim));
        }
        return x;
    };

    // Old values, then GAE per episode; timeouts are terminal.
    std::vector<double> values(timesteps.size());
    {
        std::vector<std::size_t> all(timesteps.size());
        std::iota(all.begin(), all.end(), 0);
        const std::size_t chunks = (all.size() + kCriticChunk - 1) / kCriticChunk;
        parallel_for(chunks, workers, [&](std::size_t c) {
            const std::size_t begin = c * kCriticChunk;
            const std::size_t end = std::min(all.size(), begin + kCriticChunk);
            const auto v = critic_values(critic_, critic_batch(std::span(all).subspan(begin, end - begin)));
            std::copy(v.begin(), v.end(), values.begin() + static_cast<std::ptrdiff_t>(begin));
        });
    }
    std::vector<double> advantages(timesteps.size());
    for (std::size_t i = 0; i < timesteps.size();) {
        const auto e = timesteps[i].episode;
        const auto& steps = episodes[e].steps;
        std::vector<double> rewards;
        for (const auto& s : steps) rewards.push_back(s.reward);
        const auto gae = num::gae_advantages(rewards, std::span(values).subspan(i, steps.size()), 0.0,
                                             config_.arena.gamma, config_.gae_lambda);
        for (std::size_t t = 0; t < steps.size(); ++t) {
            advantages[i + t] = gae.advantages[t];
            timesteps[i + t].ret = gae.returns[t];
        }
        i += steps.size();
    }
    {
        double mean = 0.0;
        for (std::size_t i = 0; i < timesteps.size(); ++i) {
            mean += advantages[i] * static_cast<double>(timesteps[i].sample_count);
        }
        mean = samples.empty() ? 0.0 : mean / static_cast<double>(samples.size());
        double var = 0.0;
        for (std::size_t i = 0; i < timesteps.size(); ++i) {
            const double d = advantages[i] - mean;
            var += d * d * static_cast<double>(timesteps[i].sample_count);
        }
        const double stddev = samples.empty() ? 1.0 : std::sqrt(var / static_cast<double>(samples.size()));
        for (std::size_t i = 0; i < timesteps.size(); ++i) {
            const double a = (advantages[i] - mean) / (stddev + 1e-8);
            for (std::size_t k = 0; k < timesteps[i].sample_count; ++k) samples[timesteps[i].first_sample + k].advantage = a;
        }
    }

    std::vector<double> loss_sum(static_cast<std::size_t>(types), 0.0);
    std::vector<double> loss_updates(static_cast<std::size_t>(types), 0.0);
    double value_loss_sum = 0.0;
    double value_updates = 0.0;
    const auto K = static_cast<std::size_t>(config_.minibatches);

    for (int epoch = 0; epoch < config_.ppo_epochs; ++epoch) {
        std::vector<std::size_t> order(timesteps.size());
        std::iota(order.begin(), order.end(), 0);
        num::Rng shuffle =
            num::derive_rng({config_.seed, kShuffleStream, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(epoch)});
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle() % i]);

        for (std::size_t mb = 0; mb < K; ++mb) {
            const std::size_t begin = mb * order.size() / K;
            const std::size_t end = (mb + 1) * order.size() / K;
            if (begin == end) continue;
            const std::span<const std::size_t> rows(order.data() + begin, end - begin);

            std::vector<std::vector<std::size_t>> by_type(static_cast<std::size_t>(types));
            for (auto r : rows) {
                const auto& ts = timesteps[r];
                for (std::size_t k = 0; k < ts.sample_count; ++k) {
                    const auto& s = samples[ts.first_sample + k];
                    by_type[static_cast<std::size_t>(episodes[s.episode].steps[s.step].samples[s.sample].type)].push_back(
                        ts.first_sample + k);
                }
            }

            struct Task {
                int type;  // -1 = critic
                std::size_t begin;
                std::size_t end;
            };
            std::vector<Task> tasks;
            for (int j = 0; j < types; ++j) {
                const auto n = by_type[static_cast<std::size_t>(j)].size();
                for (std::size_t b = 0; b < n; b += kPolicyChunk) tasks.push_back({j, b, std::min(n, b + kPolicyChunk)});
            }
            for (std::size_t b = 0; b < rows.size(); b += kCriticChunk) {
                tasks.push_back({-1, b, std::min(rows.size(), b + kCriticChunk)});
            }

            std::vector<policy::PolicyLossResult> policy_out(tasks.size());
            std::vector<ValueLossResult> critic_out(tasks.size());
            parallel_for(tasks.size(), workers, [&](std::size_t i) {
                const auto& task = tasks[i];
                if (task.type < 0) {
                    std::vector<double> returns;
                    for (std::size_t r = task.begin; r < task.end; ++r) returns.push_back(timesteps[rows[r]].ret);
                    critic_out[i] = value_loss_and_grad(critic_, critic_batch(rows.subspan(task.begin, task.end - task.begin)),
                                                        returns, 1.0 / static_cast<double>(rows.size()));
                    return;
                }
                const auto& ids = by_type[static_cast<std::size_t>(task.type)];
                policy::PolicyBatch batch;
                batch.observations = num::Tensor({task.end - task.begin, obs_dim});
                batch.team_infos = key_table;
                for (std::size_t r = task.begin; r < task.end; ++r) {
                    const auto& s = samples[ids[r]];
                    const auto& rec = episodes[s.episode].steps[s.step];
                    const auto& sample = rec.samples[s.sample];
                    const auto src = std::span(rec.team_obs).subspan(static_cast<std::size_t>(sample.agent) * obs_dim, obs_dim);
                    std::copy(src.begin(), src.end(),
                              batch.observations.data().begin() + static_cast<std::ptrdiff_t>((r - task.begin) * obs_dim));
                    batch.team_info_keys.push_back(s.key);
                    batch.masks.push_back(sample.mask);
                    batch.actions.push_back(sample.action);
                    batch.old_log_probs.push_back(sample.log_prob);
                    batch.advantages.push_back(s.advantage);
                }
                policy_out[i] = policy::policy_loss_and_grad(frontier_, task.type, batch, config_.ppo,
                                                             1.0 / static_cast<double>(ids.size()));
            });

            // Merge chunk results in task order.
            std::vector<policy::TypeGrads> type_grads;
            for (int j = 0; j < types; ++j) type_grads.push_back(policy::TypeGrads::zeros_like(frontier_, j));
            auto critic_grads = num::MlpGrads::zeros_like(critic_.mlp);
            std::vector<double> mb_loss(static_cast<std::size_t>(types), 0.0);
            double mb_value_loss = 0.0;
            for (std::size_t i = 0; i < tasks.size(); ++i) {
                if (tasks[i].type < 0) {
                    critic_grads.add(critic_out[i].grads);
                    mb_value_loss += critic_out[i].loss_sum;
                } else {
                    type_grads[static_cast<std::size_t>(tasks[i].type)].add(policy_out[i].grads);
                    mb_loss[static_cast<std::size_t>(tasks[i].type)] += policy_out[i].loss_sum;
                }
            }
            for (int j = 0; j < types; ++j) {
                const auto n = by_type[static_cast<std::size_t>(j)].size();
                if (!std::isfinite(mb_loss[static_cast<std::size_t>(j)])) {
                    throw NumericError("step " + std::to_string(step) + ": non-finite policy loss for type " +
                                       frontier_.shape().type_names[static_cast<std::size_t>(j)]);
                }
                if (n == 0) continue;
                loss_sum[static_cast<std::size_t>(j)] += mb_loss[static_cast<std::size_t>(j)] / static_cast<double>(n);
                loss_updates[static_cast<std::size_t>(j)] += 1.0;
            }
            if (!std::isfinite(mb_value_loss)) {
                throw NumericError("step " + std::to_string(step) + ": non-finite value loss");
            }
            value_loss_sum += mb_value_loss / static_cast<double>(rows.size());
            value_updates += 1.0;

            // Shared trunks receive the sum of every type's trunk gradient.
            std::vector<num::MlpGrads> trunk_grads;
            for (std::size_t t = 0; t < frontier_.trunks().size(); ++t) {
                trunk_grads.push_back(num::MlpGrads::zeros_like(frontier_.trunks()[t]));
            }
            for (int j = 0; j < types; ++j) {
                trunk_grads[frontier_.type_policy(j).trunk_index].add(type_grads[static_cast<std::size_t>(j)].trunk);
            }
            std::vector<std::span<double>> all_policy;
            for (auto& g : trunk_grads) {
                for (auto s : g.spans()) all_policy.push_back(s);
            }
            for (auto& g : type_grads) {
                for (auto s : hyper_grads(g)) all_policy.push_back(s);
            }
            num::clip_global_norm(all_policy, config_.max_grad_norm);
            num::clip_global_norm(critic_grads.spans(), config_.max_grad_norm);

            for (std::size_t t = 0; t < trunk_grads.size(); ++t) {
                num::adam_step(optim_.trunks[t], frontier_.mutable_trunk(t).parameters(), to_const(trunk_grads[t].spans()));
            }
            for (int j = 0; j < types; ++j) {
                num::adam_step(optim_.types[static_cast<std::size_t>(j)], hyper_params(frontier_, j),
                               to_const(hyper_grads(type_grads[static_cast<std::size_t>(j)])));
            }
            num::adam_step(optim_.critic, critic_.mlp.parameters(), to_const(critic_grads.spans()));
        }
    }

    for (int j = 0; j < types; ++j) {
        const auto u = loss_updates[static_cast<std::size_t>(j)];
        stats.policy_loss.push_back(u > 0 ? loss_sum[static_cast<std::size_t>(j)] / u : 0.0);
    }
    stats.value_loss = value_updates > 0 ? value_loss_sum / value_updates : 0.0;

    steps_done_ = step;
    stats.episodes = episodes_done();
    if (config_.is_boundary(step)) {
        const auto eval = evaluate_frontier(frontier_, config_.arena, config_.eval_episodes,
                                            boundary_eval_seed(config_.seed, step), workers);
        const double omega = eval.omega();
        stats.omega = omega;
        stats.admission = league_.try_admit(policy::duplicate_and_freeze(frontier_, omega), omega,
                                            static_cast<std::uint64_t>(step));
        omega_history_.emplace_back(step, omega);
    }
    stats.league_size = league_.size();
    if (config_.record_wall_time) {
        stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    }
    return stats;
}

void Trainer::save_checkpoint(const fs::path& dir) const {
    fs::create_directories(dir / "optim");
    write_text(dir / "config.json", train_config_to_json(config_).dump(2) + "\n");
    policy::save_group(dir / "frontier", frontier_);
    save_critic(dir / "critic", critic_);
    league::save_league(dir / "league", league_);
    json trunk_t = json::array();
    json type_t = json::array();
    for (std::size_t t = 0; t < optim_.trunks.size(); ++t) {
        save_adam(dir / "optim", "trunk" + std::to_string(t), optim_.trunks[t]);
        trunk_t.push_back(optim_.trunks[t].t);
    }
    for (std::size_t j = 0; j < optim_.types.size(); ++j) {
        save_adam(dir / "optim", "type" + std::to_string(j), optim_.types[j]);
        type_t.push_back(optim_.types[j].t);
    }
    save_adam(dir / "optim", "critic", optim_.critic);
    json history = json::array();
    for (const auto& [s, w] : omega_history_) history.push_back({s, w});
    const json state{{"format", "hlt-checkpoint"},
                     {"format_version", kCheckpointFormatVersion},
                     {"steps_done", steps_done_},
                     {"omega_history", history},
                     {"adam_t", {{"trunks", trunk_t}, {"types", type_t}, {"critic", optim_.critic.t}}}};
    write_text(dir / "state.json", state.dump(2) + "\n");
}

Trainer Trainer::load_checkpoint(const fs::path& dir) {
    const json state = read_json(dir / "state.json");
    try {
        if (state.at("format") != "hlt-checkpoint") throw CorruptArtifactError("not a training checkpoint");
        if (state.at("format_version").get<int>() != kCheckpointFormatVersion) {
            throw CorruptArtifactError("unsupported checkpoint format version " + state.at("format_version").dump());
        }
        auto config = train_config_from_json(read_json(dir / "config.json"));
        auto frontier = policy::load_group(dir / "frontier");
        auto critic = load_critic(dir / "critic");
        auto league = league::load_league(dir / "league");
        if (frontier.shape() != learner_shape(config.arena) || frontier.network() != config.network) {
            throw CorruptArtifactError("checkpoint frontier does not match its config");
        }
        auto optim = fresh_optimizer(frontier, critic, config);
        const auto& t = state.at("adam_t");
        if (t.at("trunks").size() != optim.trunks.size() || t.at("types").size() != optim.types.size()) {
            throw CorruptArtifactError("optimizer state does not match the frontier layout");
        }
        for (std::size_t i = 0; i < optim.trunks.size(); ++i) {
            load_adam(dir / "optim", "trunk" + std::to_string(i), optim.trunks[i], t.at("trunks")[i].get<std::uint64_t>());
        }
        for (std::size_t j = 0; j < optim.types.size(); ++j) {
            load_adam(dir / "optim", "type" + std::to_string(j), optim.types[j], t.at("types")[j].get<std::uint64_t>());
        }
        load_adam(dir / "optim", "critic", optim.critic, t.at("critic").get<std::uint64_t>());
        std::vector<std::pair<int, double>> history;
        for (const auto& h : state.at("omega_history")) history.emplace_back(h.at(0).get<int>(), h.at(1).get<double>());
        return Trainer(std::move(config), std::move(frontier), std::move(critic), std::move(league), std::move(optim),
                       state.at("steps_done").get<int>(), std::move(history));
    } catch (const json::exception& e) {
        throw CorruptArtifactError("malformed checkpoint state: " + std::string(e.what()));
    } catch (const ConfigError& e) {
        throw CorruptArtifactError("checkpoint config: " + std::string(e.what()));
    }
}

}  // namespace hlt::trainer
