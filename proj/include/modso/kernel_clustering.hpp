#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace modso {

/// Raised when an algorithm needs a problem component that was not supplied.
class UnsupportedProblem : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/**
 * Kernel clustering problem: data points, a point-to-kernel distance, and the
 * two ways of adapting kernels (batch fit over a class, on-line update
 * towards one point). Points and kernels may live in different spaces.
 */
template <class Point, class Kernel>
struct ClusteringProblem {
    using PointRefs = std::vector<std::reference_wrapper<const Point>>;

    std::span<const Point> data;
    std::function<double(const Point&, const Kernel&)> distance;
    /// Best kernel for a non-empty class; needed by the batch algorithm only.
    std::function<Kernel(const PointRefs&)> kernel_fit;
    /// Moves a kernel so that its distance to the point decreases.
    std::function<void(Kernel&, const Point&)> kernel_update;
};

template <class Kernel>
struct ClusteringState {
    std::vector<Kernel> kernels;
    std::vector<std::size_t> assignment;
    double distortion = 0.0;
};

/// Index of the closest kernel; lowest index on ties.
template <class Point, class Kernel, class Distance>
std::size_t assign(const Point& point, std::span<const Kernel> kernels, const Distance& distance) {
    if (kernels.empty()) throw std::invalid_argument("assign: no kernels");
    std::size_t best = 0;
    double best_d = distance(point, kernels[0]);
    for (std::size_t j = 1; j < kernels.size(); ++j) {
        const double d = distance(point, kernels[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

/// D = Σ_i d(x_i, L_{assignment(i)})
template <class Point, class Kernel>
double distortion(const ClusteringProblem<Point, Kernel>& problem, const ClusteringState<Kernel>& state) {
    double d = 0.0;
    for (std::size_t i = 0; i < problem.data.size(); ++i)
        d += problem.distance(problem.data[i], state.kernels[state.assignment[i]]);
    return d;
}

/// Assigns every point to its closest kernel and returns the resulting distortion.
template <class Point, class Kernel>
double assign_all(const ClusteringProblem<Point, Kernel>& problem, std::span<const Kernel> kernels,
                  std::vector<std::size_t>& assignment) {
    assignment.resize(problem.data.size());
    double total = 0.0;
    for (std::size_t i = 0; i < problem.data.size(); ++i) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < kernels.size(); ++j) {
            const double d = problem.distance(problem.data[i], kernels[j]);
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        assignment[i] = best;
        total += best_d;
    }
    return total;
}

template <class Kernel>
struct BatchResult {
    ClusteringState<Kernel> state;
    std::size_t iterations = 0;
    bool converged = false;
    /// Kernels fitted at each iteration.
    std::vector<std::vector<Kernel>> kernel_trajectory;
    /// Distortion after the reassignment of each iteration.
    std::vector<double> distortions;
};

/**
 * Batch dynamic cluster: alternate kernel fitting on the current classes and
 * reassignment to the closest kernel until the partition stops changing.
 * A class that becomes empty keeps its previous kernel.
 */
template <class Point, class Kernel>
BatchResult<Kernel> batch_dynamic_cluster(const ClusteringProblem<Point, Kernel>& problem, std::size_t m,
                                          std::vector<std::size_t> init_assignment, std::size_t max_iter) {
    if (!problem.kernel_fit) throw UnsupportedProblem("batch dynamic cluster needs a kernel_fit function");
    if (m == 0) throw std::invalid_argument("batch dynamic cluster needs m >= 1");
    if (init_assignment.size() != problem.data.size()) throw std::invalid_argument("initial partition size mismatch");

    using Refs = typename ClusteringProblem<Point, Kernel>::PointRefs;
    BatchResult<Kernel> result;
    auto& assignment = init_assignment;
    std::vector<Kernel> kernels;
    std::vector<std::size_t> next;

    for (std::size_t it = 1; it <= max_iter; ++it) {
        std::vector<Refs> classes(m);
        for (std::size_t i = 0; i < assignment.size(); ++i) {
            if (assignment[i] >= m) throw std::invalid_argument("initial partition uses a class index >= m");
            classes[assignment[i]].push_back(std::cref(problem.data[i]));
        }
        std::vector<Kernel> fitted;
        fitted.reserve(m);
        for (std::size_t j = 0; j < m; ++j) {
            if (!classes[j].empty()) fitted.push_back(problem.kernel_fit(classes[j]));
            else if (it > 1) fitted.push_back(kernels[j]);
            else throw std::invalid_argument("initial partition has an empty class");
        }
        kernels = std::move(fitted);
        const double d = assign_all(problem, std::span<const Kernel>(kernels), next);

        result.kernel_trajectory.push_back(kernels);
        result.distortions.push_back(d);
        result.iterations = it;
        const bool unchanged = next == assignment;
        assignment = next;
        if (unchanged) {
            result.converged = true;
            break;
        }
    }
    result.state = {std::move(kernels), std::move(assignment), result.distortions.empty() ? 0.0 : result.distortions.back()};
    return result;
}

struct OnlineOptions {
    std::uint64_t seed = 0;
    /// Stop once a sweep improves the distortion by less than this.
    double tol = 0.0;
    std::size_t max_sweeps = 100;
    /// Recompute the full distortion after every single update.
    bool track_step_distortion = false;
};

struct OnlineStep {
    std::size_t sweep = 0;
    std::size_t iter = 0;
    std::size_t point = 0;
    std::size_t chosen = 0;
    std::vector<double> distances;
    double distortion = std::numeric_limits<double>::quiet_NaN();
};

struct OnlineSweep {
    std::size_t sweep = 0;
    std::vector<std::size_t> assignment;
    double distortion = 0.0;
};

template <class Kernel>
struct OnlineObserver {
    std::function<void(const OnlineStep&, std::span<const Kernel>)> on_step;
    std::function<void(const OnlineSweep&, std::span<const Kernel>)> on_sweep;
};

template <class Kernel>
struct OnlineResult {
    ClusteringState<Kernel> state;
    std::vector<OnlineStep> steps;
    /// Entry 0 is the initial configuration; entry k follows sweep k.
    std::vector<OnlineSweep> sweeps;
};

/**
 * On-line dynamic cluster. Each sweep visits the points in a freshly seeded
 * shuffled order; every visited point moves its closest kernel towards
 * itself. Sweeps stop when the end-of-sweep distortion improves by less than
 * `opts.tol` or after `opts.max_sweeps`.
 */
template <class Point, class Kernel>
OnlineResult<Kernel> online_dynamic_cluster(const ClusteringProblem<Point, Kernel>& problem,
                                            std::vector<Kernel> kernels, const OnlineOptions& opts,
                                            const OnlineObserver<Kernel>& observer = {}) {
    if (!problem.kernel_update) throw UnsupportedProblem("on-line dynamic cluster needs a kernel_update function");
    if (kernels.empty()) throw std::invalid_argument("on-line dynamic cluster needs at least one kernel");

    OnlineResult<Kernel> result;
    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> order(problem.data.size());
    std::vector<std::size_t> assignment;

    auto end_of_sweep = [&](std::size_t sweep) {
        const double d = assign_all(problem, std::span<const Kernel>(kernels), assignment);
        result.sweeps.push_back({sweep, assignment, d});
        if (observer.on_sweep) observer.on_sweep(result.sweeps.back(), std::span<const Kernel>(kernels));
        return d;
    };

    double previous = end_of_sweep(0);
    std::size_t iter = 0;
    for (std::size_t sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            OnlineStep step;
            step.sweep = sweep;
            step.iter = iter++;
            step.point = i;
            step.distances.resize(kernels.size());
            for (std::size_t j = 0; j < kernels.size(); ++j) step.distances[j] = problem.distance(problem.data[i], kernels[j]);
            step.chosen = static_cast<std::size_t>(
                std::min_element(step.distances.begin(), step.distances.end()) - step.distances.begin());
            problem.kernel_update(kernels[step.chosen], problem.data[i]);
            if (opts.track_step_distortion) {
                std::vector<std::size_t> scratch;
                step.distortion = assign_all(problem, std::span<const Kernel>(kernels), scratch);
            }
            if (observer.on_step) observer.on_step(step, std::span<const Kernel>(kernels));
            result.steps.push_back(std::move(step));
        }
        const double current = end_of_sweep(sweep);
        if (previous - current < opts.tol) break;
        previous = current;
    }
    result.state = {std::move(kernels), result.sweeps.back().assignment, result.sweeps.back().distortion};
    return result;
}

// Vector-quantization instance.

using Vec = std::vector<double>;

double squared_euclidean(const Vec& x, const Vec& y);
double euclidean(const Vec& x, const Vec& y);
/// Component-wise mean, the exact minimizer of summed squared distances.
Vec mean_fit(const std::vector<std::reference_wrapper<const Vec>>& points);

/**
 * Vector quantization: squared-Euclidean distance with mean fitting (so that
 * the batch algorithm is batch k-means), and an on-line update that moves
 * the kernel a fraction `eta` towards the point.
 */
ClusteringProblem<Vec, Vec> make_vq_problem(std::span<const Vec> data, double eta, bool squared = true);

} // namespace modso
