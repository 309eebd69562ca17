#include "fixtures.hpp"

#include "modso/nav_env.hpp"
#include "modso/seeding.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

using namespace modso;
using namespace modso::nav;

TEST_SUITE_BEGIN("nav_env");

namespace {

// Closed-form description of the default layout, written out independently.
bool oracle_in_wall(double x, double y) {
    return x >= 4.9 && x <= 5.1 && (y <= 2.0 || (y >= 3.0 && y <= 7.0) || y >= 8.0);
}

std::optional<int> oracle_zone(double x, double y) {
    const double cx[6] = {1.5, 1.5, 4.0, 8.5, 8.5, 4.0};
    const double cy[6] = {8.5, 1.5, 2.5, 1.5, 8.5, 7.5};
    for (int i = 0; i < 6; ++i)
        if ((x - cx[i]) * (x - cx[i]) + (y - cy[i]) * (y - cy[i]) <= 0.25) return i + 1;
    return std::nullopt;
}

double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

bool on_segment(Point p, Point q, Point r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
}

bool segments_meet(Point p1, Point p2, Point q1, Point q2) {
    const double d1 = cross(q1, q2, p1), d2 = cross(q1, q2, p2), d3 = cross(p1, p2, q1), d4 = cross(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
    return (d1 == 0 && on_segment(q1, q2, p1)) || (d2 == 0 && on_segment(q1, q2, p2)) ||
           (d3 == 0 && on_segment(p1, p2, q1)) || (d4 == 0 && on_segment(p1, p2, q2));
}

/// Endpoint inside, or a crossing with one of the four edges.
bool oracle_crosses(Point p, Point q, const Rect& r) {
    if (r.contains(p) || r.contains(q)) return true;
    const Point c[4] = {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
    for (int i = 0; i < 4; ++i)
        if (segments_meet(p, q, c[i], c[(i + 1) % 4])) return true;
    return false;
}

double row_mass(const FiniteMdp& mdp, StateIndex s, std::size_t a, StateIndex target) {
    double p = 0.0;
    for (const auto& e : mdp.row(s, a))
        if (e.state == target) p += e.probability;
    return p;
}

} // namespace

TEST_CASE("default geometry examples") {
    const auto geo = default_geometry();
    CHECK(geo.check().empty());
    CHECK(geo.in_wall({5.0, 5.0}));
    CHECK_FALSE(geo.in_wall({5.0, 2.5}));
    CHECK(geo.zone_at({1.5, 8.6}) == 1);
    CHECK(geo.zones.size() == 6);
}

TEST_CASE("geometry predicates agree with closed-form tests on random points") {
    const auto geo = default_geometry();
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.0, 10.0), step(-0.3, 0.3);
    for (int i = 0; i < 10000; ++i) {
        const Point p{u(rng), u(rng)};
        CHECK(geo.in_wall(p) == oracle_in_wall(p.x, p.y));
        CHECK(geo.zone_at(p) == oracle_zone(p.x, p.y));
        const Point q{p.x + step(rng), p.y + step(rng)};
        bool want = false;
        for (const auto& w : geo.walls) want = want || oracle_crosses(p, q, w);
        CHECK(geo.crosses_wall(p, q) == want);
    }
}

TEST_CASE("geometry file round trip and errors") {
    const auto dir = fixture::scratch_dir("geometry");
    const auto geo = default_geometry();
    save_geometry(geo, dir / "g.txt");
    const auto back = load_geometry(dir / "g.txt");
    REQUIRE(back.walls.size() == geo.walls.size());
    REQUIRE(back.zones.size() == geo.zones.size());
    for (std::size_t i = 0; i < geo.walls.size(); ++i) CHECK(back.walls[i].y1 == geo.walls[i].y1);
    for (std::size_t i = 0; i < geo.zones.size(); ++i) CHECK(back.zones[i].center.x == geo.zones[i].center.x);

    std::ofstream(dir / "bad.txt") << "zone 1 1 1 0.5\ndoor 1 2\n";
    CHECK_THROWS(load_geometry(dir / "bad.txt"));
    std::ofstream(dir / "gap.txt") << "zone 2 1 1 0.5\n";
    CHECK_THROWS(load_geometry(dir / "gap.txt"));
    std::ofstream(dir / "hit.txt") << "wall 0 0 2 2\nzone 1 1 1 0.5\n";
    CHECK_THROWS(load_geometry(dir / "hit.txt"));
    CHECK_THROWS(load_geometry(dir / "missing.txt"));
}

TEST_CASE("grid layout") {
    const NavGrid grid(default_geometry(), 0.1);
    CHECK(grid.nx() == 100);
    CHECK(grid.ny() == 100);
    CHECK(grid.n_states() == grid.n_free() + 1);
    CHECK(grid.n_states() == 9841);
    CHECK_FALSE(grid.state_at({5.0, 5.0}).has_value());
    const auto s = grid.state_at({2.51, 5.02});
    REQUIRE(s.has_value());
    CHECK(grid.center(*s).x == doctest::Approx(2.55));
    CHECK(grid.center(*s).y == doctest::Approx(5.05));
    CHECK_FALSE(grid.cells_in_zone(1).empty());
}

TEST_CASE("task mdp rows, rewards and local dynamics") {
    const NavConfig cfg;
    const NavGrid grid(default_geometry(), cfg.cell);
    const TaskSpec task{2, 1};
    const auto mdp = build_task_mdp(grid, cfg, task);
    CHECK(mdp.n_states() == grid.n_states());
    CHECK(validate(mdp).empty());
    for (StateIndex s = 0; s < mdp.n_states(); ++s)
        for (std::size_t a = 0; a < kActions; ++a) {
            double sum = 0.0;
            for (const auto& e : mdp.row(s, a)) sum += e.probability;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
            CHECK(mdp.reward(s, a) >= -1.0);
            CHECK(mdp.reward(s, a) <= 1.0);
        }

    const auto open = *grid.state_at({2.55, 5.05});
    for (std::size_t a = 0; a < kActions; ++a) CHECK(mdp.reward(open, a) == 0.0);

    // just west of the central wall, far from both corridors
    const auto blocked = *grid.state_at({4.85, 5.05});
    CHECK(row_mass(mdp, blocked, 0, blocked) == doctest::Approx(1.0));
    CHECK(mdp.reward(blocked, 0) == -1.0);

    const auto t = grid.terminal();
    for (std::size_t a = 0; a < kActions; ++a) {
        CHECK(row_mass(mdp, t, a, t) == 1.0);
        CHECK(mdp.reward(t, a) == 0.0);
    }
}

TEST_CASE("goal-edge rewards match a direct enumeration of the noise directions") {
    const NavConfig cfg;
    const NavGrid grid(default_geometry(), cfg.cell);
    const auto mdp = build_task_mdp(grid, cfg, TaskSpec{2, 1});
    const auto s = *grid.state_at({2.05, 8.45});
    const auto c = grid.center(s);
    const double dist = std::hypot(c.x - 1.5, c.y - 8.5);
    REQUIRE(dist > 0.5);
    REQUIRE(dist < 0.6);
    int hits = 0;
    for (int k = 0; k < 16; ++k) {
        const double th = 2.0 * std::numbers::pi * k / 16.0;
        const double x = c.x - 0.1 + 0.03 * std::cos(th);
        const double y = c.y + 0.03 * std::sin(th);
        if ((x - 1.5) * (x - 1.5) + (y - 8.5) * (y - 8.5) <= 0.25) ++hits;
    }
    CHECK(hits > 0);
    CHECK(mdp.reward(s, 4) == doctest::Approx(hits / 16.0));
    CHECK(row_mass(mdp, s, 4, grid.terminal()) == doctest::Approx(hits / 16.0));
}

TEST_CASE("task construction is deterministic and validated") {
    NavConfig cfg;
    cfg.cell = 0.5;
    const auto a = build_task_mdp(default_geometry(), cfg, {3, 2});
    const auto b = build_task_mdp(default_geometry(), cfg, {3, 2});
    for (StateIndex s = 0; s < a.n_states(); ++s)
        for (std::size_t act = 0; act < kActions; ++act) {
            CHECK(a.reward(s, act) == b.reward(s, act));
            const auto x = a.row(s, act);
            const auto y = b.row(s, act);
            CHECK(std::vector<Successor>(x.begin(), x.end()) == std::vector<Successor>(y.begin(), y.end()));
        }
    CHECK_THROWS_AS(build_task_mdp(default_geometry(), cfg, {2, 2}), ModelError);
    CHECK_THROWS_AS(build_task_mdp(default_geometry(), cfg, {0, 2}), ModelError);
    cfg.discount = 1.0;
    CHECK_THROWS_AS(build_task_mdp(default_geometry(), cfg, {1, 2}), ModelError);
}

TEST_CASE("six task table") {
    const auto specs = six_task_specs();
    CHECK(specs[0].start_zone == 2);
    CHECK(specs[0].goal_zone == 1);
    CHECK(specs[5].start_zone == 1);
    CHECK(specs[5].goal_zone == 6);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i + 1; j < 6; ++j) CHECK(specs[i].goal_zone != specs[j].goal_zone);
}

TEST_CASE("episode simulation examples") {
    // dead end: the only action bumps a wall
    const FiniteMdp wall(2, 1, 0.9, {{{0, 1.0}}, {{1, 1.0}}}, {-1.0, 0.0});
    const auto bump = simulate_episode(wall, {0, 0}, 0, 1, 10);
    CHECK(bump.reward == -10.0);
    CHECK(bump.steps == 10);
    CHECK_FALSE(bump.reached);

    const FiniteMdp goal(2, 1, 0.9, {{{1, 1.0}}, {{1, 1.0}}}, {1.0, 0.0});
    const auto hit = simulate_episode(goal, {0, 0}, 0, 1, 10);
    CHECK(hit.reward == 1.0);
    CHECK(hit.steps == 1);
    CHECK(hit.reached);
}

TEST_CASE("exact policy on task 1 reaches the goal and beats a random policy") {
    const NavConfig cfg;
    const NavGrid grid(default_geometry(), cfg.cell);
    const TaskSpec task = six_task_specs()[0];
    const auto mdp = build_task_mdp(grid, cfg, task);
    const auto v = value_iteration(mdp, {1e-6, 100000}).values;
    const auto exact = greedy_policy(mdp, v);

    const auto first = simulate_episode(mdp, exact, grid.cells_in_zone(2)[0], 77, 1000);
    const auto again = simulate_episode(mdp, exact, grid.cells_in_zone(2)[0], 77, 1000);
    CHECK(first.reward == again.reward);
    CHECK(first.steps == again.steps);

    const auto ev = evaluate(grid, mdp, exact, task, 500, 1000, 1);
    CHECK(ev.success_rate >= 0.95);
    CHECK(ev.runs == 500);

    std::mt19937_64 rng(3);
    Policy random(mdp.n_states());
    for (auto& a : random) a = static_cast<ActionIndex>(rng() % kActions);
    const auto rnd = evaluate(grid, mdp, random, task, 100, 1000, 1);
    CHECK(rnd.mean_reward < ev.mean_reward);

    const auto one = evaluate(grid, mdp, exact, task, 1, 1000, 9);
    const auto starts = grid.cells_in_zone(task.start_zone);
    std::mt19937_64 start_rng(derive_seed(9, kStartStream));
    std::uniform_int_distribution<std::size_t> pick(0, starts.size() - 1);
    const auto direct = simulate_episode(mdp, exact, starts[pick(start_rng)], derive_seed(9, kEpisodeStreamBase), 1000);
    CHECK(one.mean_reward == direct.reward);
    CHECK(one.success_rate == (direct.reached ? 1.0 : 0.0));
    CHECK_THROWS(evaluate(grid, mdp, exact, task, 0, 1000, 1));
}

TEST_CASE("blank partition and split rules") {
    const NavGrid grid(default_geometry(), 0.5);
    const auto blank = blank_partition(grid);
    CHECK(blank.n_macros() == 2);
    CHECK(blank.size_of(1) == 1);
    CHECK(blank.macro_of(grid.terminal()) == 1);

    const auto rule = longest_axis_median_split(grid);
    CHECK_FALSE(rule(blank.members(1)).has_value());
    const auto halves = rule(blank.members(0));
    REQUIRE(halves.has_value());
    // 20 x 20 cells: the x extent ties the y extent, so the cut is on x
    for (auto s : halves->first) CHECK(grid.cell_of(s).first < 10);
    for (auto s : halves->second) CHECK(grid.cell_of(s).first >= 10);

    std::mt19937_64 rng(1);
    const auto random_rule = random_axis_split(grid);
    for (int k = 0; k < 20; ++k) {
        const auto cut = random_rule(blank.members(0), rng);
        REQUIRE(cut.has_value());
        CHECK(cut->first.size() + cut->second.size() == blank.size_of(0));
        CHECK_FALSE(cut->first.empty());
        CHECK_FALSE(cut->second.empty());
    }
}

TEST_CASE("macro rectangles cover their cells") {
    const NavGrid grid(default_geometry(), 0.5);
    auto p = split_macro(blank_partition(grid), 0, longest_axis_median_split(grid));
    REQUIRE(p.has_value());
    const auto rects = macro_rectangles(grid, *p);
    REQUIRE(rects.size() == 2);
    CHECK(rects[0].rect.x0 == 0.0);
    CHECK(rects[0].rect.x1 == doctest::Approx(5.0));
    CHECK(rects[1].rect.x0 == doctest::Approx(5.0));
    const auto dir = fixture::scratch_dir("rects");
    write_rectangles_csv(grid, *p, dir / "r.csv");
    CHECK(std::filesystem::file_size(dir / "r.csv") > 0);
}

TEST_SUITE_END();
