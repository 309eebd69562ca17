#include "oracles.hpp"

#include "modso/refinement.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

using namespace modso;

TEST_SUITE_BEGIN("refinement");

TEST_CASE("nothing to split on an all-singleton partition") {
    const auto mdp = oracle::random_mdp(1, 5, 2, 0.9);
    const auto result = learn_step(mdp, Partition::singletons(5), {});
    CHECK(result.saturated);
    CHECK(result.splits == 0);
    CHECK(result.partition == Partition::singletons(5));
}

TEST_CASE("a two-state macro with differing rewards gets its only split") {
    const FiniteMdp mdp(2, 1, 0.9, {{{0, 1.0}}, {{1, 1.0}}}, {0.0, 1.0});
    RefineConfig cfg;
    cfg.budget = 2;
    const auto result = learn_step(mdp, Partition::single(2), cfg);
    CHECK_FALSE(result.saturated);
    CHECK(result.splits == 1);
    CHECK(result.partition.assignment() == std::vector<MacroIndex>{0, 1});
}

TEST_CASE("the split goes to the macro an exhaustive search would score highest") {
    const auto mdp = oracle::random_mdp(3, 4, 2, 0.9);
    const std::vector<std::uint32_t> labels{0, 0, 1, 1};
    const auto d = oracle::dense(mdp);
    const auto g = oracle::aggregate(d, labels);
    const auto e = oracle::e_int(d, labels, false);
    const auto app = oracle::e_app(g, 0.9, e, 10000);
    const auto pi = oracle::argmax_policy(g, app);
    const auto infl = oracle::influence(g, 0.9, pi, {1.0, 1.0});

    // every legal split of a two-state macro is the same bipartition, so the
    // search reduces to the best score among the two macros
    std::size_t best = 0;
    for (std::size_t m = 1; m < 2; ++m)
        if (infl[m] * e[m] > infl[best] * e[best]) best = m;
    std::vector<MacroIndex> want{0, 0, 1, 1};
    want[best == 0 ? 1 : 3] = 2;

    RefineConfig cfg;
    cfg.budget = 4;
    const auto result = learn_step(mdp, Partition::from_assignment({0, 0, 1, 1}), cfg);
    CHECK(result.partition.assignment() == want);
}

TEST_CASE("macro count never exceeds the budget") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto mdp = oracle::random_mdp(seed, 16, 3, 0.9);
        RefineConfig cfg;
        cfg.budget = 3 + seed % 4;
        cfg.splits_per_call = 1 + seed % 3;
        Partition p = Partition::single(16);
        for (int step = 0; step < 15; ++step) {
            const auto result = learn_step(mdp, p, cfg);
            CHECK(result.partition.n_macros() <= cfg.budget);
            CHECK(result.partition.check().empty());
            p = result.partition;
        }
    }
}

// Known to fail: the bound is not monotone under refinement. See the next case.
TEST_CASE("conservative error rarely increases under refinement" * doctest::may_fail()) {
    const std::size_t trials = 100;
    std::size_t good = 0;
    for (std::uint64_t seed = 0; seed < trials; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t n = 4 + rng() % 17;
        const auto mdp = oracle::random_mdp(seed + 1000, n, 1 + rng() % 3, 0.9);
        RefineConfig cfg;
        cfg.budget = n;
        cfg.bounds.variant = BoundVariant::Conservative;
        cfg.bounds.tol = 1e-9;
        Partition p = Partition::single(n);
        double previous = module_task_error(mdp, p, cfg.bounds);
        bool monotone = true;
        for (int step = 0; step < 6; ++step) {
            const auto result = learn_step(mdp, p, cfg);
            if (result.saturated) break;
            if (result.report.scalar_error > previous + 1e-6) {
                monotone = false;
                std::printf("refinement: seed %llu step %d error %.9g -> %.9g with %zu macros\n",
                            static_cast<unsigned long long>(seed), step, previous, result.report.scalar_error,
                            result.partition.n_macros());
            }
            previous = result.report.scalar_error;
            p = result.partition;
        }
        good += monotone ? 1 : 0;
    }
    std::printf("refinement: %zu of %zu trials never increased the conservative error\n", good, trials);
    CHECK(static_cast<double>(good) >= 0.95 * static_cast<double>(trials));
}

TEST_CASE("a single macro carries no transition term, so its first split adds one") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto mdp = oracle::random_mdp(seed + 1000, 8, 2, 0.9);
        const auto d = oracle::dense(mdp);
        double reward_spread = 0.0;
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t s = 0; s < 8; ++s)
                for (std::size_t s2 = 0; s2 < 8; ++s2) reward_spread = std::max(reward_spread, std::abs(d.r[s][a] - d.r[s2][a]));
        const auto coarse = interpolation_error_bound(mdp, Partition::single(8), BoundVariant::Conservative);
        CHECK(coarse[0] == doctest::Approx(reward_spread));
        const auto halves = interpolation_error_bound(mdp, Partition::from_assignment({0, 0, 0, 0, 1, 1, 1, 1}),
                                                      BoundVariant::Conservative);
        CHECK(std::max(halves[0], halves[1]) > coarse[0]);
    }
}

TEST_CASE("learn step is deterministic") {
    const auto mdp = oracle::random_mdp(12, 14, 3, 0.9);
    RefineConfig cfg;
    cfg.budget = 5;
    cfg.splits_per_call = 2;
    Partition a = Partition::single(14), b = Partition::single(14);
    for (int step = 0; step < 8; ++step) {
        const auto ra = learn_step(mdp, a, cfg);
        const auto rb = learn_step(mdp, b, cfg);
        REQUIRE(ra.partition == rb.partition);
        CHECK(ra.report.score == rb.report.score);
        a = ra.partition;
        b = rb.partition;
    }
}

TEST_CASE("report describes the returned partition") {
    const auto mdp = oracle::random_mdp(6, 10, 2, 0.9);
    const auto result = learn_step(mdp, Partition::single(10), {});
    const auto fresh = error_report(mdp, result.partition);
    CHECK(result.report.e_app_bar == fresh.e_app_bar);
    CHECK(result.report.scalar_error == fresh.scalar_error);
}

TEST_SUITE_END();
