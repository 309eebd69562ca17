#include "fixtures.hpp"

#include "modso/csv.hpp"
#include "modso/harness.hpp"

#include <doctest.h>

#include <fstream>
#include <limits>
#include <sstream>

using namespace modso;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("harness");

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double sse(const std::vector<Vec>& pts, const std::vector<std::size_t>& labels, std::size_t m) {
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        Vec mean(2, 0.0);
        std::size_t n = 0;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (labels[i] == j) {
                mean[0] += pts[i][0];
                mean[1] += pts[i][1];
                ++n;
            }
        if (n == 0) continue;
        mean[0] /= static_cast<double>(n);
        mean[1] /= static_cast<double>(n);
        for (std::size_t i = 0; i < pts.size(); ++i)
            if (labels[i] == j) total += squared_euclidean(pts[i], mean);
    }
    return total;
}

bool same_grouping(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = 0; k < a.size(); ++k)
            if ((a[i] == a[k]) != (b[i] == b[k])) return false;
    return true;
}

} // namespace

TEST_CASE("empty config is valid and keeps every default") {
    const auto cfg = parse_config("");
    CHECK(cfg.seed == 1);
    CHECK(cfg.so.modules == 3);
    CHECK(cfg.so.budget == 400);
    CHECK(cfg.so.tol == -std::numeric_limits<double>::infinity());
    CHECK(cfg.eval.runs == 500);
    CHECK(cfg.env.cell == 0.1);
    CHECK(parse_config(canonical_text(cfg)).so.tol == cfg.so.tol);
}

TEST_CASE("config parsing") {
    const auto cfg = parse_config("# comment\nrun.seed = 7  # trailing\n\nso.bound_variant = conservative\n"
                                  "eval.policy = one-step\nenv.cell=0.25\n");
    CHECK(cfg.seed == 7);
    CHECK(cfg.so.bound_variant == BoundVariant::Conservative);
    CHECK(cfg.eval.policy == PolicyKind::OneStep);
    CHECK(cfg.env.cell == 0.25);

    CHECK_THROWS_AS(parse_config("so.colour = red"), ConfigError);
    CHECK_THROWS_AS(parse_config("run.seed"), ConfigError);
    CHECK_THROWS_AS(parse_config("run.seed = -3"), ConfigError);
    CHECK_THROWS_AS(parse_config("env.discount = 1.5"), ConfigError);
    CHECK_THROWS_AS(parse_config("so.bound_variant = tight"), ConfigError);
    CHECK_THROWS_AS(parse_config("so.modules = 0"), ConfigError);
    CHECK_THROWS_AS(parse_config("run.geometry_path = /no/such/file"), ConfigError);
    CHECK_THROWS_AS(load_config("/no/such/config"), ConfigError);
}

TEST_CASE("config hash") {
    auto a = parse_config("");
    auto b = parse_config("");
    CHECK(config_hash(a) == config_hash(b));
    b.output_dir = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("solve rejects an out-of-range task before writing anything") {
    auto cfg = parse_config("");
    cfg.output_dir = fixture::scratch_dir("solve_bad") / "out";
    std::ostringstream out, err;
    CHECK(cmd_solve(cfg, 7, out, err) == kExitUsage);
    CHECK(cmd_solve(cfg, 0, out, err) == kExitUsage);
    CHECK_FALSE(fs::exists(cfg.output_dir));
    CHECK(err.str().find("outside 1..6") != std::string::npos);
}

TEST_CASE("solve on task 1 writes values and a successful evaluation, reproducibly") {
    auto cfg = parse_config("");
    const auto root = fixture::scratch_dir("solve_task1");
    cfg.output_dir = root / "a";
    std::ostringstream out, err;
    REQUIRE(cmd_solve(cfg, 1, out, err) == kExitOk);
    const auto rows = read_csv_rows(cfg.output_dir / "eval_task1.csv");
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][1] == "exact");
    CHECK(std::stod(rows[0][4]) >= 0.95);
    CHECK(read_csv_rows(cfg.output_dir / "v_task1.csv").size() == 9841);

    const auto meta = slurp(cfg.output_dir / "eval_task1.csv.meta");
    CHECK(meta.find("config_hash=" + config_hash(cfg)) != std::string::npos);
    CHECK(meta.find("seed=1") != std::string::npos);
    CHECK(meta.find("reward=undiscounted") != std::string::npos);

    cfg.output_dir = root / "b";
    REQUIRE(cmd_solve(cfg, 1, out, err) == kExitOk);
    for (const char* name : {"v_task1.csv", "eval_task1.csv", "eval_task1.csv.meta"})
        CHECK(slurp(root / "a" / name) == slurp(root / "b" / name));
}

TEST_CASE("cluster demo separates two well-separated blobs like the best 2-partition") {
    auto cfg = parse_config("");
    cfg.output_dir = fixture::scratch_dir("cluster_demo");
    const auto outcome = run_cluster_demo(cfg);
    const auto& pts = outcome.points;
    REQUIRE(pts.size() == 10);

    std::vector<std::size_t> best_labels;
    double best = std::numeric_limits<double>::infinity();
    for (unsigned mask = 0; mask < (1U << 10); ++mask) {
        std::vector<std::size_t> labels(10);
        for (std::size_t i = 0; i < 10; ++i) labels[i] = (mask >> i) & 1U;
        const double v = sse(pts, labels, 2);
        if (v < best) {
            best = v;
            best_labels = labels;
        }
    }
    CHECK(same_grouping(best_labels, outcome.blob));
    CHECK(same_grouping(outcome.batch.state.assignment, outcome.blob));
    CHECK(same_grouping(outcome.online.state.assignment, outcome.blob));

    for (std::size_t k = 1; k < outcome.batch.distortions.size(); ++k)
        CHECK(outcome.batch.distortions[k] <= outcome.batch.distortions[k - 1]);
    const auto dist = read_csv_rows(cfg.output_dir / "batch_distortion.csv");
    for (std::size_t k = 1; k < dist.size(); ++k) CHECK(std::stod(dist[k][1]) <= std::stod(dist[k - 1][1]));

    for (const char* name : {"cluster_points.csv", "batch_distortion.csv", "online_trace.csv", "cluster_assignment.csv"}) {
        CHECK(fs::exists(cfg.output_dir / name));
        CHECK(fs::exists(cfg.output_dir / (std::string(name) + ".meta")));
    }
}

TEST_CASE("cluster demo with one kernel fits the data mean") {
    auto cfg = parse_config("cluster.m = 1");
    cfg.output_dir = fixture::scratch_dir("cluster_demo_m1");
    const auto outcome = run_cluster_demo(cfg);
    Vec mean(2, 0.0);
    for (const auto& p : outcome.points) {
        mean[0] += p[0];
        mean[1] += p[1];
    }
    mean[0] /= static_cast<double>(outcome.points.size());
    mean[1] /= static_cast<double>(outcome.points.size());
    CHECK(outcome.batch.state.kernels[0][0] == doctest::Approx(mean[0]).epsilon(1e-12));
    CHECK(outcome.batch.state.kernels[0][1] == doctest::Approx(mean[1]).epsilon(1e-12));
}

TEST_CASE("selforg on a coarse grid writes every output") {
    auto cfg = parse_config("env.cell = 0.5\nso.budget = 12\nso.max_sweeps = 3\neval.runs = 20\neval.cap = 200");
    const auto root = fixture::scratch_dir("selforg");
    cfg.output_dir = root / "a";
    std::ostringstream out, err;
    REQUIRE(cmd_selforg(cfg, out, err) == kExitOk);

    const auto asg = read_csv_rows(cfg.output_dir / "assignment.csv");
    REQUIRE(asg.size() == 6);
    for (const auto& row : asg) CHECK(std::stoul(row[1]) < 3);
    CHECK(read_csv_rows(cfg.output_dir / "sweeps.csv").size() == 4);
    CHECK(read_csv_rows(cfg.output_dir / "performance.csv").size() == 4 * 6);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(fs::exists(cfg.output_dir / fmt::format("partition_m{}.csv", j)));
        CHECK(fs::exists(cfg.output_dir / fmt::format("rectangles_m{}.csv", j)));
    }
    for (const auto& entry : fs::directory_iterator(cfg.output_dir)) {
        if (entry.path().extension() != ".csv") continue;
        CHECK(fs::exists(fs::path(entry.path().string() + ".meta")));
        CHECK_FALSE(slurp(entry.path()).empty());
    }

    cfg.output_dir = root / "b";
    REQUIRE(cmd_selforg(cfg, out, err) == kExitOk);
    for (const auto& entry : fs::directory_iterator(root / "a"))
        CHECK(slurp(entry.path()) == slurp(root / "b" / entry.path().filename()));
}

TEST_CASE("selforg with one module keeps every task on it") {
    auto cfg = parse_config("env.cell = 0.5\nso.modules = 1\nso.budget = 12\nso.max_sweeps = 2");
    cfg.output_dir = fixture::scratch_dir("selforg_m1");
    const auto outcome = run_selforg(cfg, false);
    CHECK(outcome.result.assignment == std::vector<std::size_t>(6, 0));
    for (const auto& r : outcome.result.trace) CHECK(r.chosen == 0);
    CHECK(outcome.performance.empty());
    CHECK_FALSE(fs::exists(cfg.output_dir / "performance.csv"));
}

TEST_SUITE_END();
