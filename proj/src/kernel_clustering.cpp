#include "modso/kernel_clustering.hpp"

#include <cmath>

namespace modso {

double squared_euclidean(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("dimension mismatch");
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double d = x[k] - y[k];
        acc += d * d;
    }
    return acc;
}

double euclidean(const Vec& x, const Vec& y) { return std::sqrt(squared_euclidean(x, y)); }

Vec mean_fit(const std::vector<std::reference_wrapper<const Vec>>& points) {
    if (points.empty()) throw std::invalid_argument("mean of an empty class");
    Vec mean(points.front().get().size(), 0.0);
    for (const Vec& p : points)
        for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += p[k];
    for (auto& v : mean) v /= static_cast<double>(points.size());
    return mean;
}

ClusteringProblem<Vec, Vec> make_vq_problem(std::span<const Vec> data, double eta, bool squared) {
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("step size must lie in (0, 1]");
    ClusteringProblem<Vec, Vec> problem;
    problem.data = data;
    if (squared) problem.distance = squared_euclidean;
    else problem.distance = euclidean;
    problem.kernel_fit = mean_fit;
    problem.kernel_update = [eta](Vec& kernel, const Vec& point) {
        for (std::size_t k = 0; k < kernel.size(); ++k) kernel[k] += eta * (point[k] - kernel[k]);
    };
    return problem;
}

} // namespace modso
