#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "hlt/arena/arena.hpp"
#include "hlt/arena/replay.hpp"
#include "hlt/errors.hpp"
#include "hlt/numkit/rng.hpp"

using namespace hlt;
using namespace hlt::arena;

namespace {

// Default roster ids: learners 0-1 uav, 2-5 missile, 6-9 kinetic; opponents +10.
constexpr int kUav = 0;
constexpr int kMissile = 2;
constexpr int kKinetic = 6;
constexpr int kEnemy = 10;

struct Placement {
    int id;
    int x;
    int y;
    int hp = -1;  // -1 = full
};

// Every agent not listed is dead.
ArenaState scenario(const ArenaConfig& config, std::initializer_list<Placement> placed) {
    Arena probe(config);
    probe.reset(0);
    ArenaState s = probe.state();
    for (auto& a : s.agents) {
        a.hp = 0;
        a.alive = false;
    }
    for (const auto& p : placed) {
        auto& a = s.agents[static_cast<std::size_t>(p.id)];
        a.x = p.x;
        a.y = p.y;
        a.hp = p.hp < 0 ? config.roster[static_cast<std::size_t>(a.type)].max_hp : p.hp;
        a.alive = true;
    }
    return s;
}

int random_legal(const num::ActionMask& mask, num::Rng& rng) {
    std::vector<int> legal;
    for (std::size_t a = 0; a < mask.size(); ++a) {
        if (mask[a]) legal.push_back(static_cast<int>(a));
    }
    return legal[rng() % legal.size()];
}

std::vector<int> random_learner_actions(const Arena& arena, num::Rng& rng) {
    auto actions = arena.scripted_actions(Team::opponent, rng());
    for (const auto& a : arena.state().agents) {
        if (a.team == Team::learner && a.alive) actions[static_cast<std::size_t>(a.id)] = random_legal(arena.legal_actions(a.id), rng);
    }
    return actions;
}

int team_count(const ArenaState& s, Team team, int type) {
    return static_cast<int>(std::count_if(s.agents.begin(), s.agents.end(),
                                          [&](const AgentState& a) { return a.team == team && a.type == type; }));
}

}  // namespace

TEST_CASE("reset is deterministic per seed") {
    Arena a(ArenaConfig::default_2u4m4k());
    Arena b(ArenaConfig::default_2u4m4k());
    const auto obs_a = a.reset(17);
    const auto obs_b = b.reset(17);
    CHECK(a.state() == b.state());
    CHECK(obs_a == obs_b);
}

TEST_CASE("default roster has 20 agents, 10 per team") {
    Arena arena(ArenaConfig::default_2u4m4k());
    const auto obs = arena.reset(1);
    CHECK(arena.num_agents() == 20);
    CHECK(obs.size() == 20);
    const int expected[] = {2, 4, 4};
    for (int type = 0; type < 3; ++type) {
        CHECK(team_count(arena.state(), Team::learner, type) == expected[type]);
        CHECK(team_count(arena.state(), Team::opponent, type) == expected[type]);
    }
}

TEST_CASE("different seeds change jitter but not roster counts") {
    Arena arena(ArenaConfig::default_2u4m4k());
    arena.reset(1);
    const auto first = arena.state();
    bool differs = false;
    for (std::uint64_t seed = 2; seed < 10 && !differs; ++seed) {
        arena.reset(seed);
        differs = !(arena.state() == first);
        for (int type = 0; type < 3; ++type) {
            CHECK(team_count(arena.state(), Team::learner, type) == team_count(first, Team::learner, type));
        }
    }
    CHECK(differs);
}

TEST_CASE("roster too large for grid is a configuration error") {
    auto config = ArenaConfig::default_2u4m4k();
    config.width = 5;
    CHECK_THROWS_AS(Arena{config}, ConfigError);
    config = ArenaConfig::default_2u4m4k();
    config.roster[1].count = 13;
    CHECK_THROWS_AS(Arena{config}, ConfigError);
}

TEST_CASE("all no-op leaves positions and HP unchanged with zero reward") {
    Arena arena(ArenaConfig::default_2u4m4k());
    arena.reset(3);
    auto before = arena.state();
    const std::vector<int> noop(20, action::kNoop);
    const auto result = arena.step(noop);
    CHECK(result.reward == 0.0);
    CHECK_FALSE(result.done);
    before.step = 1;
    CHECK(arena.state() == before);
}

TEST_CASE("kinetic unit cannot attack an air unit") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    arena.set_state(scenario(config, {{kKinetic, 5, 5}, {kEnemy + kUav, 6, 5}}));
    const auto mask = arena.legal_actions(kKinetic);
    for (int k = 0; k < config.attack_slots; ++k) CHECK(mask[static_cast<std::size_t>(action::kFirstAttack + k)] == 0);

    std::vector<int> actions(20, action::kNoop);
    actions[kKinetic] = action::kFirstAttack;
    try {
        arena.step(actions);
        FAIL("expected IllegalActionError");
    } catch (const IllegalActionError& e) {
        CHECK(e.agent_id() == kKinetic);
        CHECK(std::string(e.what()).find("attack slot 0") != std::string::npos);
    }
}

TEST_CASE("missile unit may attack an air unit in range") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    arena.set_state(scenario(config, {{kMissile, 5, 5}, {kEnemy + kUav, 8, 6}}));
    CHECK(arena.legal_actions(kMissile)[action::kFirstAttack] == 1);

    std::vector<int> actions(20, action::kNoop);
    actions[kMissile] = action::kFirstAttack;
    arena.step(actions);
    CHECK(arena.state().agents[kEnemy + kUav].hp == config.roster[0].max_hp - config.roster[1].attack_damage);
}

TEST_CASE("out-of-range and dead targets are masked") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    arena.set_state(scenario(config, {{kKinetic, 5, 5}, {kEnemy + kKinetic, 7, 5}}));
    CHECK(arena.legal_actions(kKinetic)[action::kFirstAttack] == 0);
    CHECK_THROWS_AS(arena.legal_actions(kKinetic + 1), std::invalid_argument);
    CHECK_THROWS_AS(arena.legal_actions(20), std::out_of_range);
    CHECK_THROWS_AS(arena.legal_actions(-1), std::out_of_range);
}

TEST_CASE("repair raises ally HP by the repair amount, capped at max") {
    const auto config = ArenaConfig::default_2u4m4k();
    const int max_hp = config.roster[2].max_hp;
    const int amount = config.roster[0].repair_amount;
    Arena arena(config);
    std::vector<int> actions(20, action::kNoop);
    actions[kUav] = arena.repair_action();

    arena.set_state(scenario(config, {{kUav, 2, 2}, {kKinetic, 3, 2, 5}, {kEnemy, 11, 11}}));
    arena.step(actions);
    CHECK(arena.state().agents[kKinetic].hp == 5 + amount);

    arena.set_state(scenario(config, {{kUav, 2, 2}, {kKinetic, 3, 2, max_hp - 1}, {kEnemy, 11, 11}}));
    const auto result = arena.step(actions);
    CHECK(arena.state().agents[kKinetic].hp == max_hp);
    CHECK(result.reward == doctest::Approx(config.reward.repair * 1.0 / 92.0));
}

TEST_CASE("repair is masked without a damaged ally or for non-support types") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    arena.set_state(scenario(config, {{kUav, 2, 2}, {kKinetic, 3, 2}, {kMissile, 6, 2, 1}, {kEnemy, 11, 11}}));
    CHECK(arena.legal_actions(kUav)[static_cast<std::size_t>(arena.repair_action())] == 0);
    CHECK(arena.legal_actions(kKinetic)[static_cast<std::size_t>(arena.repair_action())] == 0);
}

TEST_CASE("corner agents have out-of-bounds moves masked") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    arena.set_state(scenario(config, {{kKinetic, 0, 0}, {kEnemy + kKinetic, 11, 11}}));
    auto mask = arena.legal_actions(kKinetic);
    CHECK(mask[action::kBack] == 0);
    CHECK(mask[action::kDown] == 0);
    CHECK(mask[action::kForward] == 1);
    CHECK(mask[action::kUp] == 1);
    // Forward is toward the enemy side, so the opponent's forward is -x.
    mask = arena.legal_actions(kEnemy + kKinetic);
    CHECK(mask[action::kBack] == 0);
    CHECK(mask[action::kUp] == 0);
    CHECK(mask[action::kForward] == 1);
    CHECK(mask[action::kDown] == 1);
}

TEST_CASE("observations are fixed width and hide agents beyond vision") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    arena.set_state(scenario(config, {{kKinetic, 0, 0}, {kEnemy + kKinetic, 7, 0}}));
    const auto obs = arena.observe_all();
    for (const auto& o : obs) CHECK(o.size() == arena.obs_dim());
    CHECK(arena.obs_dim() == 139);
    const auto& own = obs[kKinetic];
    CHECK(std::all_of(own.begin() + 6, own.end(), [](double v) { return v == 0.0; }));
    // Dead agents observe nothing.
    CHECK(std::all_of(obs[kUav].begin(), obs[kUav].end(), [](double v) { return v == 0.0; }));

    arena.set_state(scenario(config, {{kKinetic, 0, 0}, {kEnemy + kKinetic, 6, 0}}));
    const auto seen = arena.observe(kKinetic);
    CHECK_FALSE(std::all_of(seen.begin() + 6, seen.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("scripted opponent advances when no enemy is visible") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    arena.set_state(scenario(config, {{kKinetic, 0, 5}, {kEnemy + kKinetic, 11, 5}}));
    CHECK(arena.scripted_actions(Team::opponent, 0)[kEnemy + kKinetic] == action::kForward);
    CHECK(arena.scripted_actions(Team::learner, 0)[kKinetic] == action::kForward);
}

TEST_CASE("scripted opponent attacks the lowest-HP legal target") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    // Target with HP 7 is nearer, so it occupies slot 0.
    arena.set_state(scenario(config, {{kEnemy + kMissile, 5, 5}, {kKinetic, 4, 5, 7}, {kKinetic + 1, 2, 5, 3}}));
    const auto slots = arena.enemy_slots(kEnemy + kMissile);
    REQUIRE(slots.size() == 2);
    CHECK(slots[0] == kKinetic);
    CHECK(arena.scripted_actions(Team::opponent, 0)[kEnemy + kMissile] == action::kFirstAttack + 1);
}

TEST_CASE("scripted support unit follows the ground centroid when nobody is damaged") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    arena.set_state(scenario(
        config, {{kEnemy + kUav, 11, 0}, {kEnemy + kKinetic, 11, 8}, {kEnemy + kKinetic + 1, 11, 10}, {kUav, 0, 11}}));
    CHECK(arena.scripted_actions(Team::opponent, 0)[kEnemy + kUav] == action::kUp);
}

TEST_CASE("scripted actions are always legal and deterministic") {
    Arena arena(ArenaConfig::default_2u4m4k());
    num::Rng rng = num::derive_rng({11});
    for (int episode = 0; episode < 20; ++episode) {
        arena.reset(static_cast<std::uint64_t>(episode));
        while (arena.state().outcome == Outcome::ongoing) {
            const auto a = arena.scripted_actions(Team::learner, rng());
            const auto b = arena.scripted_actions(Team::opponent, rng());
            CHECK(arena.scripted_actions(Team::opponent, 5) == arena.scripted_actions(Team::opponent, 5));
            std::vector<int> joint(a);
            for (int i = arena.team_size(); i < arena.num_agents(); ++i) joint[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(i)];
            REQUIRE_NOTHROW(arena.step(joint));
        }
    }
}

TEST_CASE("episodes are bit-exact given seed and actions") {
    auto run = [](std::uint64_t seed) {
        Arena arena(ArenaConfig::default_2u4m4k());
        arena.reset(seed);
        num::Rng rng = num::derive_rng({seed, 1});
        std::vector<std::uint64_t> trace;
        std::vector<double> rewards;
        while (arena.state().outcome == Outcome::ongoing) {
            const auto result = arena.step(random_learner_actions(arena, rng));
            trace.push_back(arena.state_hash());
            rewards.push_back(result.reward);
        }
        return std::pair{trace, rewards};
    };
    CHECK(run(42) == run(42));
    CHECK(run(42) != run(43));
}

TEST_CASE("HP stays within bounds and dead agents stay dead") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    num::Rng rng = num::derive_rng({5});
    const auto bounds = reward_bounds(config);
    for (int episode = 0; episode < 100; ++episode) {
        arena.reset(static_cast<std::uint64_t>(episode));
        std::vector<bool> dead(20, false);
        double total = 0.0;
        StepResult result;
        while (!result.done) {
            result = arena.step(random_learner_actions(arena, rng));
            total += result.reward;
            for (const auto& a : arena.state().agents) {
                const int max_hp = config.roster[static_cast<std::size_t>(a.type)].max_hp;
                REQUIRE(a.hp >= 0);
                REQUIRE(a.hp <= max_hp);
                REQUIRE(a.alive == (a.hp > 0));
                if (dead[static_cast<std::size_t>(a.id)]) REQUIRE_FALSE(a.alive);
                dead[static_cast<std::size_t>(a.id)] = !a.alive;
            }
        }
        CHECK(result.outcome != Outcome::ongoing);
        CHECK(total >= bounds.min);
        CHECK(total <= bounds.max);
        CHECK_THROWS_AS(arena.step(std::vector<int>(20, 0)), std::logic_error);
    }
}

TEST_CASE("reset state is mirror symmetric") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        arena.reset(seed);
        CHECK(mirror_state(arena.state(), config) == arena.state());
    }
}

TEST_CASE("mirrored replay swaps the outcome label") {
    const auto config = ArenaConfig::default_2u4m4k();
    const int n = config.team_size();
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Arena arena(config);
        Arena mirrored(config);
        arena.reset(seed);
        mirrored.set_state(mirror_state(arena.state(), config));
        num::Rng rng = num::derive_rng({seed, 9});
        while (arena.state().outcome == Outcome::ongoing) {
            const auto actions = random_learner_actions(arena, rng);
            std::vector<int> swapped(actions.size());
            for (int i = 0; i < 2 * n; ++i) swapped[static_cast<std::size_t>((i + n) % (2 * n))] = actions[static_cast<std::size_t>(i)];
            arena.step(actions);
            mirrored.step(swapped);
            REQUIRE(mirror_state(arena.state(), config) == mirrored.state());
        }
        CHECK(mirrored.state().outcome == swap_perspective(arena.state().outcome));
        const auto o = arena.state().outcome;
        CHECK((o == Outcome::win || o == Outcome::loss || o == Outcome::draw));
    }
}

TEST_CASE("timeout is decided by remaining HP") {
    auto config = ArenaConfig::default_2u4m4k();
    config.max_steps = 1;
    Arena arena(config);
    const std::vector<int> noop(20, action::kNoop);
    arena.set_state(scenario(config, {{kKinetic, 0, 0}, {kEnemy + kKinetic, 11, 11, 5}}));
    CHECK(arena.step(noop).outcome == Outcome::win);
    arena.set_state(scenario(config, {{kKinetic, 0, 0, 5}, {kEnemy + kKinetic, 11, 11}}));
    CHECK(arena.step(noop).outcome == Outcome::loss);
    arena.set_state(scenario(config, {{kKinetic, 0, 0}, {kEnemy + kKinetic, 11, 11}}));
    CHECK(arena.step(noop).outcome == Outcome::draw);
}

TEST_CASE("wiping out the opponent wins with the terminal bonus") {
    const auto config = ArenaConfig::default_2u4m4k();
    Arena arena(config);
    arena.set_state(scenario(config, {{kKinetic, 5, 5}, {kEnemy + kKinetic, 6, 5, 3}}));
    std::vector<int> actions(20, action::kNoop);
    actions[kKinetic] = action::kFirstAttack;
    const auto result = arena.step(actions);
    CHECK(result.done);
    CHECK(result.outcome == Outcome::win);
    CHECK(result.reward == doctest::Approx(3.0 / 92.0 + 1.0));
}

TEST_CASE("normalized reward maps the analytic range onto [0, 1]") {
    const auto config = ArenaConfig::default_2u4m4k();
    const auto b = reward_bounds(config);
    CHECK(b.max > b.min);
    CHECK(normalized_reward(b.min, config) == 0.0);
    CHECK(normalized_reward(b.max, config) == 1.0);
    CHECK(normalized_reward(0.5 * (b.min + b.max), config) == doctest::Approx(0.5));
    CHECK(normalized_reward(b.max + 10.0, config) == 1.0);
    CHECK(normalized_reward(b.min - 10.0, config) == 0.0);
    CHECK_THROWS_AS(normalized_reward(0.0, RewardBounds{1.0, 1.0}), ConfigError);
}

TEST_CASE("uniform random legal policy rarely beats the scripted opponent") {
    Arena arena(ArenaConfig::default_2u4m4k());
    num::Rng rng = num::derive_rng({2024});
    int wins = 0;
    for (int episode = 0; episode < 1000; ++episode) {
        arena.reset(static_cast<std::uint64_t>(episode));
        while (arena.state().outcome == Outcome::ongoing) arena.step(random_learner_actions(arena, rng));
        wins += arena.state().outcome == Outcome::win;
    }
    CHECK(wins < 200);
}

TEST_CASE("config JSON round-trips and rejects unknown keys") {
    const auto config = ArenaConfig::default_2u4m4k();
    const auto j = arena_config_to_json(config);
    CHECK(arena_config_from_json(j) == config);

    auto bad = j;
    bad["widht"] = 3;
    CHECK_THROWS_AS(arena_config_from_json(bad), ConfigError);
    bad = j;
    bad["roster"][0]["speed"] = 1;
    CHECK_THROWS_AS(arena_config_from_json(bad), ConfigError);
    bad = j;
    bad["width"] = "wide";
    CHECK_THROWS_AS(arena_config_from_json(bad), ConfigError);
}

TEST_CASE("replay writes one JSON line per step") {
    Arena arena(ArenaConfig::default_2u4m4k());
    arena.reset(4);
    std::ostringstream log;
    ReplayWriter writer(log);
    const std::vector<int> noop(20, action::kNoop);
    for (int t = 0; t < 3; ++t) writer.record(arena, noop, arena.step(noop));
    std::istringstream in(log.str());
    std::string line;
    int count = 0;
    while (std::getline(in, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("step") == count + 1);
        CHECK(j.at("actions").size() == 20);
        CHECK(j.at("outcome") == "ongoing");
        CHECK(j.contains("state_hash"));
        CHECK(j.contains("reward"));
        ++count;
    }
    CHECK(count == 3);
}
