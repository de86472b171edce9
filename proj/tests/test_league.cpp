#include <filesystem>
#include <map>

#include "doctest.h"
#include "hlt/errors.hpp"
#include "hlt/league/league_io.hpp"
#include "hlt/policy/group_io.hpp"
#include "support/league_oracle.hpp"

using namespace hlt;
using namespace hlt::league;
using testing::tiny_frozen_group;

namespace {

League league_of(std::size_t capacity, std::initializer_list<double> omegas) {
    League league(capacity);
    std::uint64_t version = 1;
    for (double w : omegas) league.try_admit(tiny_frozen_group(version++, w), w);
    return league;
}

std::vector<double> omegas(const League& league) {
    std::vector<double> out;
    for (const auto& m : league.members()) out.push_back(m.omega);
    return out;
}

// Pearson statistic against expected probabilities.
double chi_square(const std::vector<int>& counts, const std::vector<double>& probs, int draws) {
    double stat = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const double e = probs[i] * draws;
        stat += (counts[i] - e) * (counts[i] - e) / e;
    }
    return stat;
}

// Upper 1% points of the chi-square distribution.
double chi_square_critical(int dof) {
    static const std::map<int, double> table{{1, 6.635}, {2, 9.210}, {3, 11.345}, {4, 13.277}, {5, 15.086}};
    return table.at(dof);
}

std::vector<int> combination_counts(const League& league, double p_f, int draws, std::uint64_t seed) {
    num::Rng rng = num::derive_rng({seed});
    std::vector<int> counts(league.size() + 1, 0);
    for (int i = 0; i < draws; ++i) {
        const auto c = sample_combination(league, p_f, rng);
        ++counts[c.past_index ? *c.past_index + 1 : 0];
    }
    return counts;
}

}  // namespace

TEST_CASE("below capacity the candidate is inserted in omega order") {
    auto league = league_of(5, {0.1, 0.4, 0.8, 0.9});
    const auto r = league.try_admit(tiny_frozen_group(9, 0.6), 0.6);
    CHECK(r.status == AdmitStatus::accepted);
    CHECK_FALSE(r.evicted_version.has_value());
    CHECK(omegas(league) == std::vector<double>{0.1, 0.4, 0.6, 0.8, 0.9});
}

TEST_CASE("equal-gap tie goes to the lower-omega pair") {
    auto league = league_of(5, {0.1, 0.4, 0.45, 0.8, 0.9});
    const auto r = league.try_admit(tiny_frozen_group(6, 0.95), 0.95);
    CHECK(r.status == AdmitStatus::accepted_with_eviction);
    CHECK(r.evicted_version == 3u);
    CHECK(omegas(league) == std::vector<double>{0.1, 0.4, 0.8, 0.9, 0.95});
}

TEST_CASE("candidate closest to an older member is rejected") {
    auto league = league_of(5, {0.2, 0.4, 0.6, 0.8, 1.0});
    const auto before = omegas(league);
    const auto r = league.try_admit(tiny_frozen_group(6, 0.61), 0.61);
    CHECK(r.status == AdmitStatus::rejected);
    CHECK(r.evicted_version == 6u);
    CHECK(omegas(league) == before);
    CHECK(league.history().size() == 6);
    CHECK(league.history().back().result == r);
}

TEST_CASE("the newer member of the closest pair leaves even if it is not the candidate") {
    League league(2);
    league.try_admit(tiny_frozen_group(5, 0.15), 0.15);
    league.try_admit(tiny_frozen_group(9, 0.1), 0.1);
    const auto r = league.try_admit(tiny_frozen_group(7, 0.9), 0.9);
    CHECK(r.status == AdmitStatus::accepted_with_eviction);
    CHECK(r.evicted_version == 9u);
    CHECK(omegas(league) == std::vector<double>{0.15, 0.9});
}

TEST_CASE("try_admit rejects unfrozen candidates and bad omega") {
    League league(3);
    num::Rng rng = num::derive_rng({1});
    auto frontier = policy::PolicyGroup::create({{"a"}, 1, 2}, {1, 2, 1, 1, false, num::Activation::tanh}, rng);
    CHECK_THROWS_AS(league.try_admit(frontier, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(league.try_admit(tiny_frozen_group(1, 0.5), 1.5), std::invalid_argument);
    CHECK_THROWS_AS(League(0), std::invalid_argument);
    CHECK(league.empty());
}

TEST_CASE("league filter matches the brute-force oracle") {
    const auto mixed = testing::league_filter_check(7, 2000);
    CHECK(mixed.mismatches == 0);
    CHECK(mixed.rejected > 0);
    CHECK(mixed.evictions > 0);
    const auto monotone = testing::league_filter_check(8, 1000, {5, true, 20});
    CHECK(monotone.mismatches == 0);
    CHECK(monotone.rejected > 0);
    CHECK(monotone.evictions > 0);
}

TEST_CASE("empty league always samples frontier-frontier") {
    League league(5);
    num::Rng rng = num::derive_rng({2});
    for (int i = 0; i < 1000; ++i) CHECK(sample_combination(league, 0.1, rng).frontier_frontier());
    CHECK(sample_combination(league, 0.0, rng).frontier_frontier());
}

TEST_CASE("p_f = 0 never samples frontier-frontier and spreads evenly") {
    const auto league = league_of(5, {0.1, 0.3, 0.5, 0.7, 0.9});
    const int draws = 100000;
    const auto counts = combination_counts(league, 0.0, draws, 3);
    CHECK(counts[0] == 0);
    for (std::size_t l = 1; l < counts.size(); ++l) CHECK(std::abs(counts[l] / double(draws) - 0.2) < 0.01);
    const std::vector<int> past(counts.begin() + 1, counts.end());
    CHECK(chi_square(past, std::vector<double>(5, 0.2), draws) < chi_square_critical(4));
}

TEST_CASE("p_f = 0.1 gives 0.1 frontier-frontier and 0.18 per past group") {
    const auto league = league_of(5, {0.1, 0.3, 0.5, 0.7, 0.9});
    const int draws = 100000;
    const auto counts = combination_counts(league, 0.1, draws, 4);
    CHECK(std::abs(counts[0] / double(draws) - 0.1) < 0.01);
    for (std::size_t l = 1; l < counts.size(); ++l) CHECK(std::abs(counts[l] / double(draws) - 0.18) < 0.01);
    CHECK(chi_square(counts, {0.1, 0.18, 0.18, 0.18, 0.18, 0.18}, draws) < chi_square_critical(5));
}

TEST_CASE("sampler probabilities hold for every league size") {
    for (std::size_t n = 1; n <= 5; ++n) {
        League league(5);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = 0.1 + 0.2 * static_cast<double>(i);
            league.try_admit(tiny_frozen_group(i + 1, w), w);
        }
        const int draws = 50000;
        const auto counts = combination_counts(league, 0.3, draws, 10 + n);
        std::vector<double> probs{0.3};
        for (std::size_t i = 0; i < n; ++i) probs.push_back(0.7 / static_cast<double>(n));
        CHECK(chi_square(counts, probs, draws) < chi_square_critical(static_cast<int>(n)));
    }
}

TEST_CASE("p_f must lie in [0, 1)") {
    League league(5);
    num::Rng rng = num::derive_rng({5});
    CHECK_THROWS_AS(sample_combination(league, 1.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_combination(league, -0.1, rng), std::invalid_argument);
}

TEST_CASE("type selection is uniform over types") {
    const auto league = league_of(5, {0.5});
    num::Rng rng = num::derive_rng({6});
    const int draws = 100000;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < draws; ++i) {
        const auto a = sample_assignment(Combination{0}, league, 3, rng);
        REQUIRE(a.past_type_count() == 1);
        REQUIRE(a.past_version == 1u);
        ++counts[static_cast<std::size_t>(*a.selected_type)];
    }
    for (int c : counts) CHECK(std::abs(c / double(draws) - 1.0 / 3.0) < 0.01);
    CHECK(chi_square(counts, std::vector<double>(3, 1.0 / 3.0), draws) < chi_square_critical(2));
}

TEST_CASE("assignments replace at most one type") {
    const auto league = league_of(5, {0.2, 0.4, 0.6});
    num::Rng rng = num::derive_rng({7});
    for (int i = 0; i < 10000; ++i) {
        const auto c = sample_combination(league, 0.1, rng);
        const auto a = sample_assignment(c, league, 3, rng);
        CHECK(a.past_type_count() == (c.frontier_frontier() ? 0 : 1));
    }
    const auto ff = sample_assignment(Combination{}, league, 3, rng);
    CHECK(ff.is_frontier_only());
    CHECK(ff.past_type_count() == 0);
    for (int i = 0; i < 100; ++i) CHECK(*sample_assignment(Combination{1}, league, 1, rng).selected_type == 0);
    CHECK_THROWS_AS(sample_assignment(Combination{}, league, 0, rng), std::invalid_argument);
}

TEST_CASE("compose_mixed swaps in the past group at the selected type only") {
    const auto league = league_of(5, {0.1, 0.2, 0.3, 0.4, 0.5});
    num::Rng rng = num::derive_rng({8});
    const auto frontier = policy::PolicyGroup::create({{"a", "b", "c"}, 1, 2}, {1, 2, 1, 1, false, num::Activation::tanh}, rng);

    const auto ff = compose_mixed(policy::MixedAssignment::all_frontier(3), frontier, league);
    for (const auto* g : ff.per_type) CHECK(g == &frontier);
    CHECK_FALSE(ff.selected_omega.has_value());

    const auto mixed = compose_mixed(policy::MixedAssignment::with_past(3, 1, 3, 4), frontier, league);
    CHECK(mixed.per_type[0] == &frontier);
    CHECK(mixed.per_type[1] == &league.members()[3].group);
    CHECK(mixed.per_type[2] == &frontier);
    CHECK(mixed.selected_omega == 0.4);
}

TEST_CASE("compose_mixed rejects evicted members") {
    League league(2);
    league.try_admit(tiny_frozen_group(5, 0.1), 0.1);
    league.try_admit(tiny_frozen_group(6, 0.9), 0.9);
    num::Rng rng = num::derive_rng({9});
    const auto frontier = policy::PolicyGroup::create({{"a", "b", "c"}, 1, 2}, {1, 2, 1, 1, false, num::Activation::tanh}, rng);
    const auto stale = policy::MixedAssignment::with_past(3, 0, 1, 6);
    CHECK_NOTHROW(compose_mixed(stale, frontier, league));
    // Version 6 is the newer of the closest pair (0.88, 0.9), so slot 1 changes hands.
    league.try_admit(tiny_frozen_group(2, 0.88), 0.88);
    CHECK(league.members()[1].group.version() == 2u);
    CHECK_THROWS_AS(compose_mixed(stale, frontier, league), DanglingMemberError);
    CHECK_THROWS_AS(compose_mixed(policy::MixedAssignment::with_past(3, 0, 7, 2), frontier, league),
                    DanglingMemberError);
}

TEST_CASE("league manifest round-trips with members and history") {
    num::Rng rng = num::derive_rng({10});
    auto frontier = policy::PolicyGroup::create({{"a", "b"}, 3, 2}, {4, 2, 3, 1, false, num::Activation::tanh}, rng);
    League league(2);
    for (int i = 0; i < 4; ++i) {
        const double w = 0.2 * (i + 1);
        league.try_admit(policy::duplicate_and_freeze(frontier, w), w, static_cast<std::uint64_t>(13 * (i + 1)));
    }
    const auto dir = std::filesystem::temp_directory_path() / "hlt_test_league";
    std::filesystem::remove_all(dir);
    save_league(dir, league);
    const auto loaded = load_league(dir);
    CHECK(loaded.capacity() == 2);
    CHECK(loaded.history() == league.history());
    REQUIRE(loaded.size() == league.size());
    for (std::size_t i = 0; i < league.size(); ++i) {
        CHECK(loaded.members()[i].group == league.members()[i].group);
        CHECK(loaded.members()[i].omega == league.members()[i].omega);
        CHECK(loaded.members()[i].admitted_at_step == league.members()[i].admitted_at_step);
    }
    const auto manifest = league_manifest(league);
    CHECK(manifest.at("members").size() == 2);
    CHECK(manifest.at("history").size() == 4);

    std::filesystem::remove_all(dir / manifest.at("members")[0].at("checkpoint").get<std::string>());
    CHECK_THROWS_AS(load_league(dir), CorruptArtifactError);
    std::filesystem::remove_all(dir);
}
