#include "modso/self_organization.hpp"

#include "modso/csv.hpp"
#include "modso/seeding.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace modso {

double ModuleState::error(const TaskRef& task, const BoundOptions& bounds) const {
    if (task.id >= cache.size()) cache.resize(task.id + 1);
    auto& entry = cache[task.id];
    if (entry.stale) {
        entry.error = module_task_error(*task.mdp, partition, bounds);
        entry.stale = false;
    }
    return entry.error;
}

void ModuleState::set_partition(Partition p) {
    partition = std::move(p);
    for (auto& entry : cache) entry.stale = true;
}

std::vector<ModuleState> initial_modules(std::size_t n_states, std::size_t n_tasks, const SoConfig& cfg) {
    if (cfg.modules == 0) throw std::invalid_argument("self-organization needs at least one module");
    const Partition blank = cfg.blank ? *cfg.blank : Partition::single(n_states);
    if (blank.n_states() != n_states) throw ModelError("blank partition does not match the task state space");

    std::vector<ModuleState> modules;
    for (std::size_t j = 0; j < cfg.modules; ++j) {
        ModuleState module{j, blank, cfg.refine.budget, std::vector<ModuleState::CacheEntry>(n_tasks)};
        std::mt19937_64 rng(derive_seed(cfg.seed, kWarmupStreamBase + j));
        const SplitRule seeded = [&](std::span<const StateIndex> members) { return cfg.warmup_rule(members, rng); };
        for (std::size_t k = 0; k < cfg.warmup_splits; ++k) {
            std::vector<MacroIndex> candidates;
            for (MacroIndex m = 0; m < module.partition.n_macros(); ++m)
                if (module.partition.size_of(m) >= 2) candidates.push_back(m);
            while (!candidates.empty()) {
                std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
                const auto idx = pick(rng);
                if (auto next = split_macro(module.partition, candidates[idx], seeded)) {
                    module.partition = std::move(*next);
                    break;
                }
                candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(idx));
            }
        }
        modules.push_back(std::move(module));
    }
    return modules;
}

std::vector<TaskRef> task_refs(std::span<const FiniteMdp> tasks) {
    std::vector<TaskRef> refs;
    refs.reserve(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) refs.push_back({i, &tasks[i]});
    return refs;
}

ClusteringProblem<TaskRef, ModuleState> make_so_problem(std::span<const TaskRef> tasks, const SoConfig& cfg) {
    ClusteringProblem<TaskRef, ModuleState> problem;
    problem.data = tasks;
    const BoundOptions bounds = cfg.refine.bounds;
    problem.distance = [bounds](const TaskRef& task, const ModuleState& module) { return module.error(task, bounds); };
    problem.kernel_update = [refine_cfg = cfg.refine, steps = cfg.learn_steps_per_pick](ModuleState& module,
                                                                                        const TaskRef& task) {
        for (std::size_t k = 0; k < steps; ++k) {
            RefineConfig refine = refine_cfg;
            refine.budget = module.budget;
            auto learned = learn_step(*task.mdp, module.partition, refine);
            module.set_partition(std::move(learned.partition));
            if (task.id >= module.cache.size()) module.cache.resize(task.id + 1);
            // the report was computed with the same bound options as the distance
            module.cache[task.id] = {learned.report.scalar_error, false};
        }
    };
    return problem;
}

namespace {

std::vector<std::size_t> macro_counts(std::span<const ModuleState> modules) {
    std::vector<std::size_t> counts;
    counts.reserve(modules.size());
    for (const auto& m : modules) counts.push_back(m.partition.n_macros());
    return counts;
}

} // namespace

SoResult self_organize(std::span<const FiniteMdp> tasks, const SoConfig& cfg, const SweepCallback& on_sweep) {
    if (tasks.empty()) throw std::invalid_argument("self-organization needs at least one task");
    const auto n_states = tasks.front().n_states();
    for (const auto& t : tasks)
        if (t.n_states() != n_states) throw ModelError("all tasks must share one state space");

    const auto refs = task_refs(tasks);
    auto problem = make_so_problem(refs, cfg);

    SoResult result;
    OnlineObserver<ModuleState> observer;
    observer.on_step = [&](const OnlineStep& step, std::span<const ModuleState> modules) {
        result.trace.push_back({step.sweep, step.iter, step.point, step.chosen, step.distances, step.distortion,
                                macro_counts(modules)});
    };
    observer.on_sweep = [&](const OnlineSweep& sweep, std::span<const ModuleState> modules) {
        result.sweeps.push_back({sweep.sweep, sweep.assignment, sweep.distortion, macro_counts(modules)});
        if (on_sweep) on_sweep(result.sweeps.back(), modules);
    };

    OnlineOptions opts;
    opts.seed = derive_seed(cfg.seed, kShuffleStream);
    opts.tol = cfg.tol;
    opts.max_sweeps = cfg.max_sweeps;
    opts.track_step_distortion = true;

    auto online = online_dynamic_cluster(problem, initial_modules(n_states, tasks.size(), cfg), opts, observer);
    result.modules = std::move(online.state.kernels);
    result.assignment = std::move(online.state.assignment);
    for (std::size_t k = 1; k < result.sweeps.size(); ++k) {
        if (result.sweeps[k].assignment == result.sweeps[k - 1].assignment) {
            result.stabilized_sweep = k;
            break;
        }
    }
    return result;
}

double global_error(std::span<const FiniteMdp> tasks, std::span<const ModuleState> modules,
                    std::span<const std::size_t> assignment, const BoundOptions& bounds) {
    if (assignment.size() != tasks.size()) throw std::invalid_argument("global_error: assignment size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < tasks.size(); ++i)
        total += module_task_error(tasks[i], modules[assignment[i]].partition, bounds);
    return total;
}

std::size_t best_module(const TaskRef& task, std::span<const ModuleState> modules, const BoundOptions& bounds) {
    return assign(task, modules, [&](const TaskRef& t, const ModuleState& m) { return m.error(t, bounds); });
}

void write_trace_csv(const SoResult& result, const std::filesystem::path& path) {
    const std::size_t m = result.modules.size();
    std::string header = "sweep,iter,task,chosen_module";
    for (std::size_t j = 0; j < m; ++j) header += fmt::format(",err_m{}", j);
    header += ",global_error";
    CsvWriter out(path, header);
    for (const auto& r : result.trace)
        out.raw_line(fmt::format("{},{},{},{},{},{}", r.sweep, r.iter, r.task, r.chosen, join_fields(r.errors),
                                 r.global_error));
}

void write_assignment_csv(std::span<const std::size_t> assignment, const std::filesystem::path& path) {
    CsvWriter out(path, "task,module");
    for (std::size_t i = 0; i < assignment.size(); ++i) out.row(i, assignment[i]);
}

} // namespace modso
