#include "hlt/trainer/rollout.hpp"

#include "hlt/errors.hpp"
#include "hlt/numkit/rng.hpp"
#include "hlt/trainer/parallel.hpp"

namespace hlt::trainer {

using policy::PolicySource;

Lineup make_lineup(const policy::PolicyGroup& frontier, const policy::PolicyGroup* past,
                   std::optional<double> past_omega, const std::vector<PolicySource>& sources) {
    const int n = frontier.num_types();
    if (static_cast<int>(sources.size()) != n) throw std::invalid_argument("one policy source per type required");
    bool any_past = false;
    for (auto s : sources) any_past = any_past || s == PolicySource::past;
    if (any_past && (!past || !past_omega)) throw std::invalid_argument("past sources need a past group and its omega");
    Lineup lineup;
    lineup.source_values.assign(static_cast<std::size_t>(n), 1.0);
    for (int j = 0; j < n; ++j) {
        if (sources[static_cast<std::size_t>(j)] == PolicySource::past) {
            lineup.source_values[static_cast<std::size_t>(j)] = *past_omega;
        }
    }
    for (int j = 0; j < n; ++j) {
        const bool is_past = sources[static_cast<std::size_t>(j)] == PolicySource::past;
        lineup.per_type.push_back(is_past ? past : &frontier);
        lineup.team_info.push_back(is_past ? policy::build_frozen_team_info(j, n)
                                           : policy::team_info_from_values(j, lineup.source_values));
        lineup.trainable.push_back(!is_past && !frontier.frozen());
    }
    return lineup;
}

Lineup lineup_for_assignment(const policy::MixedAssignment& assignment, const policy::PolicyGroup& frontier,
                             const league::League& league) {
    const auto mixed = league::compose_mixed(assignment, frontier, league);
    const policy::PolicyGroup* past = assignment.selected_type ? mixed.per_type[*assignment.selected_type] : nullptr;
    return make_lineup(frontier, past, mixed.selected_omega, assignment.sources);
}

EpisodeRecord run_episode(const arena::ArenaConfig& config, const Lineup& lineup, std::uint64_t episode_seed,
                          bool record) {
    arena::Arena env(config);
    auto observations = env.reset(episode_seed);
    num::Rng rng = num::derive_rng({episode_seed, 1});
    const int n = env.team_size();
    const int types = config.num_types();
    const std::size_t obs_dim = env.obs_dim();

    std::vector<policy::PreparedPolicy> prepared;
    for (int j = 0; j < types; ++j) {
        prepared.push_back(policy::prepare(*lineup.per_type[static_cast<std::size_t>(j)], j,
                                           lineup.team_info[static_cast<std::size_t>(j)]));
    }

    EpisodeRecord ep;
    ep.seed = episode_seed;
    std::vector<std::vector<double>> logits(static_cast<std::size_t>(n));
    while (true) {
        const auto& state = env.state();
        // Batched logits per type, then sampling in agent-id order.
        for (int j = 0; j < types; ++j) {
            std::vector<int> ids;
            for (int i = 0; i < n; ++i) {
                const auto& a = state.agents[static_cast<std::size_t>(i)];
                if (a.alive && a.type == j) ids.push_back(i);
            }
            if (ids.empty()) continue;
            num::Tensor batch({ids.size(), obs_dim});
            for (std::size_t k = 0; k < ids.size(); ++k) {
                const auto& o = observations[static_cast<std::size_t>(ids[k])];
                std::copy(o.begin(), o.end(), batch.data().begin() + static_cast<std::ptrdiff_t>(k * obs_dim));
            }
            const auto out = prepared[static_cast<std::size_t>(j)].logits_batch(batch);
            const std::size_t width = out.dim(1);
            for (std::size_t k = 0; k < ids.size(); ++k) {
                const auto row = out.data().subspan(k * width, width);
                logits[static_cast<std::size_t>(ids[k])].assign(row.begin(), row.end());
            }
        }

        StepRecord step;
        if (record) {
            step.team_obs.reserve(static_cast<std::size_t>(n) * obs_dim);
            for (int i = 0; i < n; ++i) {
                const auto& o = observations[static_cast<std::size_t>(i)];
                step.team_obs.insert(step.team_obs.end(), o.begin(), o.end());
            }
        }
        auto actions = env.scripted_actions(arena::Team::opponent, num::derive_seed({episode_seed, 2,
                                                                                     static_cast<std::uint64_t>(state.step)}));
        for (int i = 0; i < n; ++i) {
            const auto& a = state.agents[static_cast<std::size_t>(i)];
            if (!a.alive) continue;
            auto mask = env.legal_actions(i);
            const auto& l = logits[static_cast<std::size_t>(i)];
            const auto draw = num::categorical_sample(l, mask, rng);
            actions[static_cast<std::size_t>(i)] = static_cast<int>(draw.action);
            if (lineup.trainable[static_cast<std::size_t>(a.type)]) {
                ep.entropy_sum += num::masked_entropy(l, mask);
                ep.decisions += 1;
                if (record) {
                    step.samples.push_back({i, a.type, static_cast<int>(draw.action), draw.log_prob, std::move(mask)});
                }
            }
        }
        auto result = env.step(actions);
        step.reward = result.reward;
        ep.total_reward += result.reward;
        ep.length += 1;
        if (record) ep.steps.push_back(std::move(step));
        observations = std::move(result.observations);
        if (result.done) {
            ep.outcome = result.outcome;
            break;
        }
    }
    return ep;
}

std::uint64_t eval_episode_seed(std::uint64_t stream_seed, std::size_t index) {
    return num::derive_seed({stream_seed, 0xe7a1, static_cast<std::uint64_t>(index)});
}

EvalResult evaluate_lineup(const arena::ArenaConfig& config, const Lineup& lineup, int episodes,
                           std::uint64_t stream_seed, int workers, std::vector<arena::Outcome>* outcomes) {
    if (episodes < 1) throw std::invalid_argument("evaluation needs at least one episode");
    std::vector<arena::Outcome> results(static_cast<std::size_t>(episodes));
    parallel_for(results.size(), workers, [&](std::size_t i) {
        results[i] = run_episode(config, lineup, eval_episode_seed(stream_seed, i), false).outcome;
    });
    EvalResult r;
    r.episodes = episodes;
    for (auto o : results) {
        r.wins += o == arena::Outcome::win;
        r.draws += o == arena::Outcome::draw;
        r.losses += o == arena::Outcome::loss;
    }
    if (outcomes) *outcomes = std::move(results);
    return r;
}

EvalResult evaluate_frontier(const policy::PolicyGroup& frontier, const arena::ArenaConfig& config, int episodes,
                             std::uint64_t stream_seed, int workers) {
    const std::vector<PolicySource> sources(static_cast<std::size_t>(frontier.num_types()), PolicySource::frontier);
    return evaluate_lineup(config, make_lineup(frontier, nullptr, std::nullopt, sources), episodes, stream_seed,
                           workers);
}

}  // namespace hlt::trainer
