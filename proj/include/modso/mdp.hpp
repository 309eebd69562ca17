#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace modso {

using StateIndex = std::uint32_t;
using ActionIndex = std::uint32_t;

using ValueFunction = std::vector<double>;
using Policy = std::vector<ActionIndex>;

/// Raised when an iterative solver hits its iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, std::size_t iterations, double residual)
        : std::runtime_error(what), iterations_(iterations), residual_(residual) {}

    std::size_t iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t iterations_;
    double residual_;
};

/// Raised on structurally invalid inputs (empty macro, mismatched sizes, ...).
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Successor {
    StateIndex state;
    double probability;

    friend bool operator==(const Successor&, const Successor&) = default;
};

/**
 * Finite MDP with sparse transition rows.
 *
 * Rows are stored contiguously (CSR layout) and addressed by (state, action).
 * The constructor only checks shapes; probability and discount invariants are
 * reported by validate() so that malformed models can be inspected.
 */
class FiniteMdp {
public:
    FiniteMdp() = default;

    /// `rows[s * n_actions + a]` is the successor list of (s, a); `rewards`
    /// uses the same layout.
    FiniteMdp(std::size_t n_states, std::size_t n_actions, double discount,
              const std::vector<std::vector<Successor>>& rows, std::vector<double> rewards);

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }
    double discount() const noexcept { return discount_; }

    std::span<const Successor> row(std::size_t s, std::size_t a) const {
        const auto k = s * n_actions_ + a;
        return {successors_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
    }
    double reward(std::size_t s, std::size_t a) const { return rewards_[s * n_actions_ + a]; }

    std::size_t n_entries() const noexcept { return successors_.size(); }
    /// max |R(s,a)|
    double max_abs_reward() const;

private:
    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    double discount_ = 0.0;
    std::vector<std::size_t> offsets_{0};
    std::vector<Successor> successors_;
    std::vector<double> rewards_;
};

/// Lists every invariant violation with its (s,a) location; empty means ok.
std::vector<std::string> validate(const FiniteMdp& mdp);

double q_value(const FiniteMdp& mdp, std::size_t s, std::size_t a, const ValueFunction& v);

/// (B*v)(s) = max_a [R(s,a) + γ Σ T(s,a,s') v(s')]
ValueFunction bellman_backup(const FiniteMdp& mdp, const ValueFunction& v);

struct SolveOptions {
    double tol = 1e-6;
    std::size_t max_iter = 100000;
};

struct SolveResult {
    ValueFunction values;
    std::size_t iterations = 0;
    /// sup-norm of the last update
    double last_change = 0.0;
};

/**
 * Jacobi value iteration.
 *
 * Stops once the sup-norm change drops to tol·(1−γ)/γ, which guarantees
 * ‖B*V − V‖∞ ≤ tol for the returned V. Throws ConvergenceError when
 * max_iter is reached first.
 */
SolveResult value_iteration(const FiniteMdp& mdp, const SolveOptions& opts = {},
                            const std::optional<ValueFunction>& initial = std::nullopt);

/// Greedy policy with respect to v; ties go to the lowest action index.
Policy greedy_policy(const FiniteMdp& mdp, const ValueFunction& v);

/// V^π by iterating the π-restricted backup to the same stopping rule as value_iteration.
ValueFunction policy_value(const FiniteMdp& mdp, const Policy& pi, const SolveOptions& opts = {});

/// Writes transitions.csv (s,a,s',p) and rewards.csv (s,a,r) into `dir`.
void write_mdp_csv(const FiniteMdp& mdp, const std::filesystem::path& dir);

/// Reads the two CSV files back; sizes are inferred from the largest indices.
FiniteMdp read_mdp_csv(const std::filesystem::path& transitions, const std::filesystem::path& rewards,
                       double discount);

} // namespace modso
