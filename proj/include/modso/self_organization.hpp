#pragma once

#include "modso/aggregation.hpp"
#include "modso/error_bounds.hpp"
#include "modso/kernel_clustering.hpp"
#include "modso/mdp.hpp"
#include "modso/refinement.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace modso {

/// A task as seen by the clustering loop: its position in the task list and its MDP.
struct TaskRef {
    std::size_t id = 0;
    const FiniteMdp* mdp = nullptr;
};

/**
 * One module: an adaptive partition shared by every task assigned to it.
 *
 * Distances to tasks are cached; any change of the partition marks the whole
 * cache stale.
 */
struct ModuleState {
    struct CacheEntry {
        double error = 0.0;
        bool stale = true;
    };

    std::size_t id = 0;
    Partition partition;
    std::size_t budget = 0;
    mutable std::vector<CacheEntry> cache;

    /// Cached-or-fresh module_task_error for task `task`.
    double error(const TaskRef& task, const BoundOptions& bounds) const;
    void set_partition(Partition p);
};

struct SoConfig {
    std::size_t modules = 3;
    std::size_t max_sweeps = 40;
    /// Stop once a sweep lowers the global error by less than this.
    double tol = 0.0;
    std::size_t warmup_splits = 2;
    std::uint64_t seed = 1;
    /// Learn() calls applied to the chosen module per picked task.
    std::size_t learn_steps_per_pick = 1;
    /// Budget, split rule and bound options; the bound options also define the distance.
    RefineConfig refine;
    /// Starting partition of every module before warm-up.
    std::optional<Partition> blank;
    RandomSplitRule warmup_rule = random_index_split();
};

struct SoRecord {
    std::size_t sweep = 0;
    std::size_t iter = 0;
    std::size_t task = 0;
    std::size_t chosen = 0;
    std::vector<double> errors;
    double global_error = 0.0;
    std::vector<std::size_t> macro_counts;
};

struct SoSweep {
    std::size_t sweep = 0;
    std::vector<std::size_t> assignment;
    double global_error = 0.0;
    std::vector<std::size_t> macro_counts;
};

struct SoResult {
    std::vector<ModuleState> modules;
    std::vector<std::size_t> assignment;
    std::vector<SoRecord> trace;
    /// Entry 0 describes the warmed-up modules before any learning.
    std::vector<SoSweep> sweeps;
    /// First sweep whose end assignment equals that of the previous sweep.
    std::optional<std::size_t> stabilized_sweep;
};

using SweepCallback = std::function<void(const SoSweep&, std::span<const ModuleState>)>;

/// Seed streams used by self_organize: stream 0 shuffles tasks, stream 1 + j warms up module j.
inline constexpr std::uint64_t kShuffleStream = 0;
inline constexpr std::uint64_t kWarmupStreamBase = 1;

/// Blank modules after their seeded random warm-up splits.
std::vector<ModuleState> initial_modules(std::size_t n_states, std::size_t n_tasks, const SoConfig& cfg);

/// The clustering problem (tasks as data, modules as kernels) run by self_organize.
ClusteringProblem<TaskRef, ModuleState> make_so_problem(std::span<const TaskRef> tasks, const SoConfig& cfg);

std::vector<TaskRef> task_refs(std::span<const FiniteMdp> tasks);

/**
 * Modular self-organization: on-line dynamic clustering of tasks with
 * modules as kernels, module_task_error as distance and learn_step as the
 * kernel update.
 */
SoResult self_organize(std::span<const FiniteMdp> tasks, const SoConfig& cfg, const SweepCallback& on_sweep = {});

/// Σ over tasks of the error of its assigned module, evaluated fresh.
double global_error(std::span<const FiniteMdp> tasks, std::span<const ModuleState> modules,
                    std::span<const std::size_t> assignment, const BoundOptions& bounds);

/// Module with the smallest (cached) error for the task; lowest index on ties.
std::size_t best_module(const TaskRef& task, std::span<const ModuleState> modules, const BoundOptions& bounds);

/// `sweep,iter,task,chosen_module,err_m0,...,global_error`
void write_trace_csv(const SoResult& result, const std::filesystem::path& path);
/// `task,module`
void write_assignment_csv(std::span<const std::size_t> assignment, const std::filesystem::path& path);

} // namespace modso
