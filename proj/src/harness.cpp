#include "modso/harness.hpp"

#include "modso/csv.hpp"
#include "modso/seeding.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>

namespace modso {

namespace fs = std::filesystem;

void write_meta(const fs::path& csv, const RunConfig& cfg, std::string_view command) {
    std::ofstream out(fs::path(csv.string() + ".meta"), std::ios::binary);
    if (!out) throw std::runtime_error("cannot write metadata for " + csv.string());
    out << "command=" << command << '\n'
        << "config_hash=" << config_hash(cfg) << '\n'
        << "seed=" << cfg.seed << '\n'
        << "tool_version=" << kToolVersion << '\n'
        << "reward=undiscounted\n";
}

SoConfig make_so_config(const RunConfig& cfg, const nav::NavGrid& grid) {
    SoConfig so;
    so.modules = cfg.so.modules;
    so.max_sweeps = cfg.so.max_sweeps;
    so.tol = cfg.so.tol;
    so.warmup_splits = cfg.so.warmup_splits;
    so.seed = cfg.seed;
    so.learn_steps_per_pick = cfg.so.learn_steps_per_pick;
    so.refine.budget = cfg.so.budget;
    so.refine.splits_per_call = cfg.so.splits_per_call;
    so.refine.bounds.variant = cfg.so.bound_variant;
    so.refine.bounds.tol = cfg.so.bound_tol;
    so.refine.bounds.weight = cfg.so.influence_weight;
    so.refine.split_rule = nav::longest_axis_median_split(grid);
    so.blank = nav::blank_partition(grid);
    so.warmup_rule = nav::random_axis_split(grid);
    return so;
}

namespace {

SolveOptions solve_options(const RunConfig& cfg) { return {cfg.solve.tol, cfg.solve.max_iter}; }

std::uint64_t eval_seed(const RunConfig& cfg, std::size_t task) {
    return derive_seed(derive_seed(cfg.seed, kEvalStream), task);
}

void prepare_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
}

class Outputs {
public:
    Outputs(const RunConfig& cfg, std::string_view command) : cfg_(cfg), command_(command) {
        prepare_output_dir(cfg.output_dir);
    }

    fs::path path(std::string_view name) const { return cfg_.output_dir / name; }

    void done(const fs::path& csv, std::vector<fs::path>& files) const {
        write_meta(csv, cfg_, command_);
        files.push_back(csv);
    }

private:
    const RunConfig& cfg_;
    std::string command_;
};

} // namespace

SolveOutcome run_solve(const RunConfig& cfg, std::size_t task) {
    if (task < 1 || task > 6) throw UsageError(fmt::format("task index {} is outside 1..6", task));
    const auto specs = nav::six_task_specs();
    const auto& spec = specs[task - 1];
    const nav::NavGrid grid(resolve_geometry(cfg), cfg.env.cell);
    const auto mdp = nav::build_task_mdp(grid, cfg.env, spec);

    SolveOutcome outcome;
    outcome.solve = value_iteration(mdp, solve_options(cfg));
    const auto policy = greedy_policy(mdp, outcome.solve.values);
    outcome.evaluation = nav::evaluate(grid, mdp, policy, spec, cfg.eval.runs, cfg.eval.cap, eval_seed(cfg, task - 1));

    const Outputs out(cfg, "solve");
    {
        CsvWriter values(out.path(fmt::format("v_task{}.csv", task)), "state,value");
        for (std::size_t s = 0; s < outcome.solve.values.size(); ++s) values.row(s, outcome.solve.values[s]);
        out.done(values.path(), outcome.files);
    }
    {
        CsvWriter eval(out.path(fmt::format("eval_task{}.csv", task)), "task,policy_tag,runs,mean_reward,success_rate");
        eval.row(task, "exact", outcome.evaluation.runs, outcome.evaluation.mean_reward, outcome.evaluation.success_rate);
        out.done(eval.path(), outcome.files);
    }
    return outcome;
}

SelforgOutcome run_selforg(const RunConfig& cfg, bool evaluate) {
    const auto tasks = nav::make_six_tasks(resolve_geometry(cfg), cfg.env);
    const auto so = make_so_config(cfg, tasks.grid);
    const Outputs out(cfg, "selforg");

    SelforgOutcome outcome;
    const auto on_sweep = [&](const SoSweep& sweep, std::span<const ModuleState> modules) {
        if (!evaluate) return;
        SweepPerformance perf;
        perf.sweep = sweep.sweep;
        for (std::size_t i = 0; i < tasks.mdps.size(); ++i) {
            const auto j = sweep.assignment[i];
            const auto policy = module_policy(tasks.mdps[i], modules[j].partition, cfg.eval.policy, solve_options(cfg));
            const auto ev = nav::evaluate(tasks.grid, tasks.mdps[i], policy, tasks.specs[i], cfg.eval.runs, cfg.eval.cap,
                                          eval_seed(cfg, i));
            perf.tasks.push_back({j, ev});
            perf.mean_reward += ev.mean_reward;
            perf.mean_success += ev.success_rate;
        }
        perf.mean_reward /= static_cast<double>(tasks.mdps.size());
        perf.mean_success /= static_cast<double>(tasks.mdps.size());
        outcome.performance.push_back(std::move(perf));
    };
    outcome.result = self_organize(tasks.mdps, so, on_sweep);
    const auto& result = outcome.result;

    write_trace_csv(result, out.path("trace.csv"));
    out.done(out.path("trace.csv"), outcome.files);
    write_assignment_csv(result.assignment, out.path("assignment.csv"));
    out.done(out.path("assignment.csv"), outcome.files);

    for (const auto& module : result.modules) {
        const auto part = out.path(fmt::format("partition_m{}.csv", module.id));
        write_partition_csv(module.partition, part);
        out.done(part, outcome.files);
        const auto rects = out.path(fmt::format("rectangles_m{}.csv", module.id));
        nav::write_rectangles_csv(tasks.grid, module.partition, rects);
        out.done(rects, outcome.files);
    }

    {
        std::string header = "sweep,assignment,global_error";
        for (std::size_t j = 0; j < result.modules.size(); ++j) header += fmt::format(",macros_m{}", j);
        if (evaluate) header += ",mean_reward,mean_success";
        CsvWriter sweeps(out.path("sweeps.csv"), header);
        for (std::size_t k = 0; k < result.sweeps.size(); ++k) {
            const auto& s = result.sweeps[k];
            std::string groups;
            for (auto j : s.assignment) groups += fmt::format("{}", j);
            std::string line = fmt::format("{},{},{},{}", s.sweep, groups, s.global_error, join_fields(s.macro_counts));
            if (evaluate)
                line += fmt::format(",{},{}", outcome.performance[k].mean_reward, outcome.performance[k].mean_success);
            sweeps.raw_line(line);
        }
        out.done(sweeps.path(), outcome.files);
    }

    if (evaluate) {
        CsvWriter perf(out.path("performance.csv"), "sweep,task,module,runs,mean_reward,success_rate");
        for (const auto& p : outcome.performance)
            for (std::size_t i = 0; i < p.tasks.size(); ++i)
                perf.row(p.sweep, i + 1, p.tasks[i].module, p.tasks[i].evaluation.runs, p.tasks[i].evaluation.mean_reward,
                         p.tasks[i].evaluation.success_rate);
        out.done(perf.path(), outcome.files);
    }
    return outcome;
}

std::vector<Vec> blob_dataset(const RunConfig& cfg, std::vector<std::size_t>* blob_of) {
    const auto& c = cfg.cluster;
    std::mt19937_64 rng(derive_seed(cfg.seed, 0));
    std::normal_distribution<double> noise(0.0, c.spread);
    std::vector<Vec> points;
    if (blob_of) blob_of->clear();
    for (std::size_t b = 0; b < c.blobs; ++b) {
        for (std::size_t k = 0; k < c.points_per_blob; ++k) {
            const double x = static_cast<double>(b) * c.separation + noise(rng);
            const double y = noise(rng);
            points.push_back({x, y});
            if (blob_of) blob_of->push_back(b);
        }
    }
    return points;
}

ClusterDemoOutcome run_cluster_demo(const RunConfig& cfg) {
    const auto& c = cfg.cluster;
    ClusterDemoOutcome outcome;
    outcome.points = blob_dataset(cfg, &outcome.blob);
    const auto n = outcome.points.size();
    const auto problem = make_vq_problem(outcome.points, c.eta);

    // round-robin start mixes the blobs, so the batch run has work to do
    std::vector<std::size_t> init(n);
    for (std::size_t i = 0; i < n; ++i) init[i] = i % c.m;
    outcome.batch = batch_dynamic_cluster(problem, c.m, init, c.max_iter);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(cfg.seed, 1));
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Vec> kernels;
    for (std::size_t j = 0; j < c.m; ++j) kernels.push_back(outcome.points[order[j]]);
    OnlineOptions opts;
    opts.seed = derive_seed(cfg.seed, 2);
    opts.tol = c.tol;
    opts.max_sweeps = c.max_sweeps;
    opts.track_step_distortion = true;
    outcome.online = online_dynamic_cluster(problem, std::move(kernels), opts);

    const Outputs out(cfg, "cluster-demo");
    {
        CsvWriter pts(out.path("cluster_points.csv"), "point_index,x,y,blob");
        for (std::size_t i = 0; i < n; ++i) pts.row(i, outcome.points[i][0], outcome.points[i][1], outcome.blob[i]);
        out.done(pts.path(), outcome.files);
    }
    {
        CsvWriter batch(out.path("batch_distortion.csv"), "iteration,distortion");
        for (std::size_t k = 0; k < outcome.batch.distortions.size(); ++k) batch.row(k + 1, outcome.batch.distortions[k]);
        out.done(batch.path(), outcome.files);
    }
    {
        CsvWriter trace(out.path("online_trace.csv"), "sweep,point_index,assigned_kernel,distortion");
        for (const auto& s : outcome.online.steps) trace.row(s.sweep, s.point, s.chosen, s.distortion);
        out.done(trace.path(), outcome.files);
    }
    {
        CsvWriter assign(out.path("cluster_assignment.csv"), "point_index,batch_kernel,online_kernel");
        for (std::size_t i = 0; i < n; ++i)
            assign.row(i, outcome.batch.state.assignment[i], outcome.online.state.assignment[i]);
        out.done(assign.path(), outcome.files);
    }
    return outcome;
}

namespace {

template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        body();
        return kExitOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "failed: " << e.what() << '\n';
        return kExitRuntime;
    }
}

void list_files(std::ostream& out, const std::vector<fs::path>& files) {
    for (const auto& f : files) out << "wrote " << f.string() << '\n';
}

} // namespace

int cmd_solve(const RunConfig& cfg, long task, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (task < 1 || task > 6) throw UsageError(fmt::format("task index {} is outside 1..6", task));
        const auto outcome = run_solve(cfg, static_cast<std::size_t>(task));
        out << fmt::format("task {}: {} iterations, success rate {:.3f}, mean reward {:.4f}\n", task,
                           outcome.solve.iterations, outcome.evaluation.success_rate, outcome.evaluation.mean_reward);
        list_files(out, outcome.files);
    });
}

int cmd_selforg(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto outcome = run_selforg(cfg);
        const auto& r = outcome.result;
        out << fmt::format("{} sweeps, final assignment {}", r.sweeps.size() - 1, join_fields(r.assignment));
        if (r.stabilized_sweep) out << fmt::format(", stable from sweep {}", *r.stabilized_sweep);
        out << '\n';
        if (!outcome.performance.empty())
            out << fmt::format("final mean success {:.3f}, mean reward {:.4f}\n", outcome.performance.back().mean_success,
                               outcome.performance.back().mean_reward);
        list_files(out, outcome.files);
    });
}

int cmd_cluster_demo(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto outcome = run_cluster_demo(cfg);
        out << fmt::format("batch: {} iterations, distortion {:.6g}; on-line: {} sweeps, distortion {:.6g}\n",
                           outcome.batch.iterations, outcome.batch.state.distortion, outcome.online.sweeps.size() - 1,
                           outcome.online.state.distortion);
        list_files(out, outcome.files);
    });
}

} // namespace modso
