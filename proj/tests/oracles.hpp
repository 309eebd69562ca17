#pragma once

// Reference implementations used only by the tests. They work on dense
// tables and favour the most direct formulation over speed, so that they
// share as little code as possible with the library under test.

#include "modso/mdp.hpp"

#include <cstdint>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

struct DenseMdp {
    std::size_t n = 0;
    std::size_t m = 0;
    double gamma = 0.0;
    /// t[s][a][s']
    std::vector<Matrix> t;
    /// r[s][a]
    Matrix r;
};

/// Seeded random MDP: rewards uniform in [-1, 1], each row has 1..branching successors.
modso::FiniteMdp random_mdp(std::uint64_t seed, std::size_t n_states, std::size_t n_actions, double gamma,
                            std::size_t branching = 3);

DenseMdp dense(const modso::FiniteMdp& mdp);

/// Iterates the dense Bellman operator `iterations` times from zero.
std::vector<double> brute_force_values(const DenseMdp& d, std::size_t iterations = 20000);

/// Gaussian elimination with partial pivoting.
std::vector<double> solve_linear(Matrix a, std::vector<double> b);

/// (I − γ T_π)^{-1} R_π
std::vector<double> policy_values(const DenseMdp& d, const std::vector<std::uint32_t>& pi);

/// Componentwise maximum of V^π over every deterministic policy (tiny models only).
std::vector<double> optimal_by_enumeration(const DenseMdp& d);

/// Random assignment of n states onto exactly k labels 0..k-1.
std::vector<std::uint32_t> random_assignment(std::uint64_t seed, std::size_t n, std::size_t k);

struct DenseAggregate {
    std::size_t k = 0;
    Matrix r;                 // r[macro][a]
    std::vector<Matrix> t;    // t[macro][a][macro']
    std::vector<std::size_t> size;
};

/// Member averages computed with explicit double sums.
DenseAggregate aggregate(const DenseMdp& d, const std::vector<std::uint32_t>& assignment);

/// Macro MDP assembled by hand, then solved by brute force.
std::vector<double> macro_values(const DenseMdp& d, const std::vector<std::uint32_t>& assignment);

/// Interpolation-error bound by explicit loops over member pairs.
std::vector<double> e_int(const DenseMdp& d, const std::vector<std::uint32_t>& assignment, bool conservative);

/// Fixed point of f ↦ e + max_a γ Σ T̂ f, by `iterations` plain iterations.
std::vector<double> e_app(const DenseAggregate& agg, double gamma, const std::vector<double>& e_int_bar,
                          std::size_t iterations = 10000);

/// argmax_a Σ T̂(ŝ,a,·) f, lowest action on ties.
std::vector<std::uint32_t> argmax_policy(const DenseAggregate& agg, const std::vector<double>& f);

/// Influence by a direct linear solve of (I − γ P_errᵀ) x = source.
std::vector<double> influence(const DenseAggregate& agg, double gamma, const std::vector<std::uint32_t>& pi,
                              const std::vector<double>& source);

/// Batch k-means (Lloyd) from an initial assignment; returns the centroid trajectory.
std::vector<std::vector<std::vector<double>>> kmeans_trajectory(const std::vector<std::vector<double>>& points,
                                                                std::vector<std::size_t> assignment, std::size_t m,
                                                                std::size_t max_iter);

} // namespace oracle
