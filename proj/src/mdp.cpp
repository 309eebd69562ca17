#include "modso/mdp.hpp"

#include "modso/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include <fmt/format.h>

namespace modso {

FiniteMdp::FiniteMdp(std::size_t n_states, std::size_t n_actions, double discount,
                     const std::vector<std::vector<Successor>>& rows, std::vector<double> rewards)
    : n_states_(n_states), n_actions_(n_actions), discount_(discount), rewards_(std::move(rewards)) {
    if (n_states == 0 || n_actions == 0) throw ModelError("MDP needs at least one state and one action");
    if (rows.size() != n_states * n_actions)
        throw ModelError(fmt::format("expected {} transition rows, got {}", n_states * n_actions, rows.size()));
    if (rewards_.size() != n_states * n_actions)
        throw ModelError(fmt::format("expected {} rewards, got {}", n_states * n_actions, rewards_.size()));

    offsets_.clear();
    offsets_.reserve(rows.size() + 1);
    offsets_.push_back(0);
    std::size_t total = 0;
    for (const auto& r : rows) total += r.size();
    successors_.reserve(total);
    for (const auto& r : rows) {
        successors_.insert(successors_.end(), r.begin(), r.end());
        offsets_.push_back(successors_.size());
    }
}

double FiniteMdp::max_abs_reward() const {
    double m = 0.0;
    for (double r : rewards_) m = std::max(m, std::abs(r));
    return m;
}

std::vector<std::string> validate(const FiniteMdp& mdp) {
    std::vector<std::string> issues;
    if (!(mdp.discount() < 1.0)) issues.push_back(fmt::format("discount {} not < 1", mdp.discount()));
    if (!(mdp.discount() >= 0.0)) issues.push_back(fmt::format("discount {} is negative", mdp.discount()));

    std::unordered_set<StateIndex> seen;
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
            if (!std::isfinite(mdp.reward(s, a)))
                issues.push_back(fmt::format("non-finite reward at ({},{})", s, a));
            seen.clear();
            double sum = 0.0;
            for (const auto& [next, p] : mdp.row(s, a)) {
                if (next >= mdp.n_states())
                    issues.push_back(fmt::format("successor {} out of range at ({},{})", next, s, a));
                if (!seen.insert(next).second)
                    issues.push_back(fmt::format("duplicate successor {} at ({},{})", next, s, a));
                if (!(p >= 0.0 && p <= 1.0))
                    issues.push_back(fmt::format("probability {} outside [0,1] at ({},{})", p, s, a));
                sum += p;
            }
            if (!(std::abs(sum - 1.0) <= 1e-9))
                issues.push_back(fmt::format("row sum {} != 1 at ({},{})", sum, s, a));
        }
    }
    return issues;
}

double q_value(const FiniteMdp& mdp, std::size_t s, std::size_t a, const ValueFunction& v) {
    double acc = 0.0;
    for (const auto& [next, p] : mdp.row(s, a)) acc += p * v[next];
    return mdp.reward(s, a) + mdp.discount() * acc;
}

namespace {

void check_size(const FiniteMdp& mdp, const ValueFunction& v) {
    if (v.size() != mdp.n_states())
        throw ModelError(fmt::format("value function has {} entries, MDP has {} states", v.size(), mdp.n_states()));
}

double stop_threshold(double tol, double discount) {
    if (discount <= 0.0) return std::numeric_limits<double>::infinity();
    return tol * (1.0 - discount) / discount;
}

double sup_change(const ValueFunction& a, const ValueFunction& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

ValueFunction bellman_backup(const FiniteMdp& mdp, const ValueFunction& v) {
    check_size(mdp, v);
    ValueFunction out(mdp.n_states());
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) best = std::max(best, q_value(mdp, s, a, v));
        out[s] = best;
    }
    return out;
}

SolveResult value_iteration(const FiniteMdp& mdp, const SolveOptions& opts,
                            const std::optional<ValueFunction>& initial) {
    if (!(opts.tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    ValueFunction v = initial ? *initial : ValueFunction(mdp.n_states(), 0.0);
    check_size(mdp, v);

    const double threshold = stop_threshold(opts.tol, mdp.discount());
    double change = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        ValueFunction next = bellman_backup(mdp, v);
        change = sup_change(next, v);
        v = std::move(next);
        if (change <= threshold) return {std::move(v), it, change};
    }
    throw ConvergenceError(fmt::format("value iteration did not converge in {} iterations (last change {})",
                                       opts.max_iter, change),
                           opts.max_iter, change);
}

Policy greedy_policy(const FiniteMdp& mdp, const ValueFunction& v) {
    check_size(mdp, v);
    Policy pi(mdp.n_states(), 0);
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        double best = q_value(mdp, s, 0, v);
        for (std::size_t a = 1; a < mdp.n_actions(); ++a) {
            const double q = q_value(mdp, s, a, v);
            if (q > best) {
                best = q;
                pi[s] = static_cast<ActionIndex>(a);
            }
        }
    }
    return pi;
}

ValueFunction policy_value(const FiniteMdp& mdp, const Policy& pi, const SolveOptions& opts) {
    if (pi.size() != mdp.n_states()) throw ModelError("policy size does not match the MDP");
    for (auto a : pi)
        if (a >= mdp.n_actions()) throw ModelError(fmt::format("policy action {} out of range", a));

    const double threshold = stop_threshold(opts.tol, mdp.discount());
    ValueFunction v(mdp.n_states(), 0.0), next(mdp.n_states());
    double change = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        for (std::size_t s = 0; s < mdp.n_states(); ++s) next[s] = q_value(mdp, s, pi[s], v);
        change = sup_change(next, v);
        std::swap(v, next);
        if (change <= threshold) return v;
    }
    throw ConvergenceError(fmt::format("policy evaluation did not converge in {} iterations", opts.max_iter),
                           opts.max_iter, change);
}

void write_mdp_csv(const FiniteMdp& mdp, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    CsvWriter trans(dir / "transitions.csv", "s,a,s',p");
    CsvWriter rew(dir / "rewards.csv", "s,a,r");
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
            for (const auto& [next, p] : mdp.row(s, a)) trans.row(s, a, next, p);
            rew.row(s, a, mdp.reward(s, a));
        }
    }
}

FiniteMdp read_mdp_csv(const std::filesystem::path& transitions, const std::filesystem::path& rewards,
                       double discount) {
    const auto trows = read_csv_rows(transitions);
    const auto rrows = read_csv_rows(rewards);

    std::size_t n_states = 0, n_actions = 0;
    auto parse_index = [](const std::string& field) { return static_cast<std::size_t>(std::stoull(field)); };
    for (const auto& r : trows) {
        if (r.size() != 4) throw ModelError("transitions.csv rows must have 4 fields");
        n_states = std::max({n_states, parse_index(r[0]) + 1, parse_index(r[2]) + 1});
        n_actions = std::max(n_actions, parse_index(r[1]) + 1);
    }
    for (const auto& r : rrows) {
        if (r.size() != 3) throw ModelError("rewards.csv rows must have 3 fields");
        n_states = std::max(n_states, parse_index(r[0]) + 1);
        n_actions = std::max(n_actions, parse_index(r[1]) + 1);
    }

    std::vector<std::vector<Successor>> rows(n_states * n_actions);
    std::vector<double> rew(n_states * n_actions, 0.0);
    for (const auto& r : trows) {
        const auto s = parse_index(r[0]), a = parse_index(r[1]);
        rows[s * n_actions + a].push_back({static_cast<StateIndex>(parse_index(r[2])), std::stod(r[3])});
    }
    for (const auto& r : rrows) rew[parse_index(r[0]) * n_actions + parse_index(r[1])] = std::stod(r[2]);
    return FiniteMdp(n_states, n_actions, discount, rows, std::move(rew));
}

} // namespace modso
