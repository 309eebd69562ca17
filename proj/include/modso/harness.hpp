#pragma once

#include "modso/config.hpp"
#include "modso/kernel_clustering.hpp"
#include "modso/nav_env.hpp"
#include "modso/self_organization.hpp"

#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace modso {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// A bad command-line argument (as opposed to a failure while running).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Seed stream of the evaluation episodes run by the harness; task i uses derive_seed(stream seed, i).
inline constexpr std::uint64_t kEvalStream = 0x65766131;

/// Writes `<csv>.meta` next to an output file.
void write_meta(const std::filesystem::path& csv, const RunConfig& cfg, std::string_view command);

/// Self-organization settings for the navigation tasks on `grid`.
SoConfig make_so_config(const RunConfig& cfg, const nav::NavGrid& grid);

struct SolveOutcome {
    SolveResult solve;
    nav::Evaluation evaluation;
    std::vector<std::filesystem::path> files;
};

/// Exact value iteration on task `task` (1-based) and evaluation of its greedy policy.
SolveOutcome run_solve(const RunConfig& cfg, std::size_t task);

struct TaskPerformance {
    std::size_t module = 0;
    nav::Evaluation evaluation;
};

struct SweepPerformance {
    std::size_t sweep = 0;
    std::vector<TaskPerformance> tasks;
    double mean_reward = 0.0;
    double mean_success = 0.0;
};

struct SelforgOutcome {
    SoResult result;
    std::vector<SweepPerformance> performance;
    std::vector<std::filesystem::path> files;
};

/**
 * Self-organization of the six navigation tasks. After every sweep each
 * task is evaluated with the policy of the module it is assigned to.
 * Set `evaluate` to false to skip the per-sweep evaluations.
 */
SelforgOutcome run_selforg(const RunConfig& cfg, bool evaluate = true);

struct ClusterDemoOutcome {
    std::vector<Vec> points;
    std::vector<std::size_t> blob;
    BatchResult<Vec> batch;
    OnlineResult<Vec> online;
    std::vector<std::filesystem::path> files;
};

/// Gaussian blobs spaced `cluster.separation` apart along the x axis.
std::vector<Vec> blob_dataset(const RunConfig& cfg, std::vector<std::size_t>* blob_of = nullptr);

/// Batch and on-line dynamic cluster on the blob dataset.
ClusterDemoOutcome run_cluster_demo(const RunConfig& cfg);

/// Command wrappers: report errors on `err` and map them to exit codes.
int cmd_solve(const RunConfig& cfg, long task, std::ostream& out, std::ostream& err);
int cmd_selforg(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_cluster_demo(const RunConfig& cfg, std::ostream& out, std::ostream& err);

} // namespace modso
