#include "hlt/analysis/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "hlt/numkit/rng.hpp"
#include "hlt/trainer/parallel.hpp"
#include "hlt/trainer/rollout.hpp"

namespace hlt::analysis {

namespace {

constexpr std::uint64_t kExclusiveStream = 0xc0e;
constexpr std::uint64_t kInclusiveStream = 0xc1e;
constexpr std::uint64_t kRolesStream = 0x201e;
constexpr std::uint64_t kTypeDraw = 0x7e;

struct Candidate {
    const policy::PolicyGroup* group = nullptr;
    double omega = 0.0;
    bool self_mix = false;
};

void check_options(const AnalysisOptions& o) {
    if (o.episodes < 1) throw std::invalid_argument("episodes must be positive");
    if (o.workers < 1) throw std::invalid_argument("workers must be positive");
}

/// Wins for episodes 0..n-1 of `stream`, episode i played by lineups[pick(i)].
template <typename Pick>
std::vector<char> play(const arena::ArenaConfig& config, const std::vector<trainer::Lineup>& lineups, Pick pick, int n,
                       std::uint64_t stream, int workers) {
    std::vector<char> wins(static_cast<std::size_t>(n));
    trainer::parallel_for(wins.size(), workers, [&](std::size_t i) {
        const auto& lineup = lineups[pick(static_cast<int>(i))];
        const auto r = trainer::run_episode(config, lineup, trainer::eval_episode_seed(stream, i), false);
        wins[i] = r.outcome == arena::Outcome::win ? 1 : 0;
    });
    return wins;
}

int count(const std::vector<char>& wins) {
    int c = 0;
    for (char w : wins) c += w;
    return c;
}

std::vector<policy::PolicySource> sources_with(int types, int special, policy::PolicySource special_source) {
    const auto other =
        special_source == policy::PolicySource::past ? policy::PolicySource::frontier : policy::PolicySource::past;
    std::vector<policy::PolicySource> s(static_cast<std::size_t>(types), other);
    s[static_cast<std::size_t>(special)] = special_source;
    return s;
}

/// Frontier baseline on the stream, then the control copy plus filtered members.
struct Setup {
    std::vector<char> baseline;
    policy::PolicyGroup copy;
    std::vector<Candidate> candidates;
};

void prepare_candidates(Setup& s, const policy::PolicyGroup& frontier, const league::League& league,
                        const arena::ArenaConfig& config, const AnalysisOptions& options, std::uint64_t stream) {
    check_options(options);
    if (league.empty()) throw EmptyLeagueError("the league is empty");
    const auto frontier_lineup = trainer::make_lineup(
        frontier, nullptr, std::nullopt, std::vector(static_cast<std::size_t>(frontier.num_types()), policy::PolicySource::frontier));
    s.baseline = play(config, {frontier_lineup}, [](int) { return 0; }, options.episodes, stream, options.workers);
    const double frontier_omega = static_cast<double>(count(s.baseline)) / options.episodes;
    if (options.self_mix) {
        auto source = frontier;
        s.copy = policy::duplicate_and_freeze(source, frontier_omega);
        s.candidates.push_back({&s.copy, frontier_omega, true});
    }
    for (const auto& m : league.members()) {
        if (m.omega < options.omega_below) s.candidates.push_back({&m.group, m.omega, false});
    }
}

}  // namespace

Interval wilson_interval(int wins, int n, double z) {
    if (n <= 0) return {0.0, 1.0};
    const double p = static_cast<double>(wins) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

std::string to_string(CompatMode mode) { return mode == CompatMode::exclusive ? "exclusive" : "inclusive"; }

CompatMode compat_mode_from_string(const std::string& s) {
    if (s == "exclusive") return CompatMode::exclusive;
    if (s == "inclusive") return CompatMode::inclusive;
    throw std::invalid_argument("unknown compat mode '" + s + "' (expected exclusive or inclusive)");
}

CompatReport compat(CompatMode mode, const policy::PolicyGroup& frontier, const league::League& league,
                    const arena::ArenaConfig& config, const AnalysisOptions& options) {
    const auto stream =
        num::derive_seed({options.seed, mode == CompatMode::exclusive ? kExclusiveStream : kInclusiveStream});
    Setup setup;
    prepare_candidates(setup, frontier, league, config, options, stream);
    const int types = frontier.num_types();
    // The minority type of episode i is shared by every row.
    std::vector<int> special(static_cast<std::size_t>(options.episodes));
    for (std::size_t i = 0; i < special.size(); ++i) {
        special[i] = static_cast<int>(num::derive_seed({stream, kTypeDraw, i}) % static_cast<std::uint64_t>(types));
    }
    const auto minority =
        mode == CompatMode::exclusive ? policy::PolicySource::past : policy::PolicySource::frontier;

    CompatReport report;
    report.mode = mode;
    report.type_names = frontier.shape().type_names;
    for (std::size_t r = 0; r < setup.candidates.size(); ++r) {
        const auto& c = setup.candidates[r];
        std::vector<trainer::Lineup> lineups;
        for (int j = 0; j < types; ++j) {
            lineups.push_back(trainer::make_lineup(frontier, c.group, c.omega, sources_with(types, j, minority)));
        }
        const auto wins = play(config, lineups, [&](int i) { return special[static_cast<std::size_t>(i)]; },
                               options.episodes, stream, options.workers);
        CompatRow row;
        row.version = c.group->version();
        row.omega = c.omega;
        row.self_mix = c.self_mix;
        row.episodes = options.episodes;
        row.wins = count(wins);
        report.rows.push_back(row);
        for (int i = 0; i < options.episodes; ++i) {
            report.raw.push_back({static_cast<int>(r), special[static_cast<std::size_t>(i)], i,
                                  trainer::eval_episode_seed(stream, static_cast<std::size_t>(i)),
                                  wins[static_cast<std::size_t>(i)] != 0});
        }
    }
    return report;
}

CompatReport compat_exclusive(const policy::PolicyGroup& frontier, const league::League& league,
                              const arena::ArenaConfig& config, const AnalysisOptions& options) {
    return compat(CompatMode::exclusive, frontier, league, config, options);
}

CompatReport compat_inclusive(const policy::PolicyGroup& frontier, const league::League& league,
                              const arena::ArenaConfig& config, const AnalysisOptions& options) {
    return compat(CompatMode::inclusive, frontier, league, config, options);
}

RoleMatrix role_matrix(const policy::PolicyGroup& frontier, const league::League& league,
                       const arena::ArenaConfig& config, const AnalysisOptions& options) {
    const auto stream = num::derive_seed({options.seed, kRolesStream});
    Setup setup;
    prepare_candidates(setup, frontier, league, config, options, stream);
    const int types = frontier.num_types();

    RoleMatrix m;
    m.type_names = frontier.shape().type_names;
    m.frontier_episodes = options.episodes;
    m.frontier_wins = count(setup.baseline);
    for (int i = 0; i < options.episodes; ++i) {
        m.raw.push_back({-1, -1, i, trainer::eval_episode_seed(stream, static_cast<std::size_t>(i)),
                         setup.baseline[static_cast<std::size_t>(i)] != 0});
    }
    for (std::size_t r = 0; r < setup.candidates.size(); ++r) {
        const auto& c = setup.candidates[r];
        RoleRow row;
        row.version = c.group->version();
        row.omega = c.omega;
        row.self_mix = c.self_mix;
        for (int j = 0; j < types; ++j) {
            const std::vector lineups{
                trainer::make_lineup(frontier, c.group, c.omega, sources_with(types, j, policy::PolicySource::past))};
            const auto wins = play(config, lineups, [](int) { return 0; }, options.episodes, stream, options.workers);
            row.cells.push_back({options.episodes, count(wins)});
            for (int i = 0; i < options.episodes; ++i) {
                m.raw.push_back({static_cast<int>(r), j, i, trainer::eval_episode_seed(stream, static_cast<std::size_t>(i)),
                                 wins[static_cast<std::size_t>(i)] != 0});
            }
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

}  // namespace hlt::analysis
