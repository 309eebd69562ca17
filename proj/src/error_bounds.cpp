#include "modso/error_bounds.hpp"

#include "modso/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace modso {

std::string_view to_string(BoundVariant v) {
    return v == BoundVariant::AsWritten ? "as-written" : "conservative";
}

BoundVariant parse_bound_variant(std::string_view text) {
    if (text == "as-written") return BoundVariant::AsWritten;
    if (text == "conservative") return BoundVariant::Conservative;
    throw std::invalid_argument(fmt::format("unknown bound variant '{}'", text));
}

std::string_view to_string(InfluenceWeight w) {
    return w == InfluenceWeight::Macro ? "macro" : "state";
}

InfluenceWeight parse_influence_weight(std::string_view text) {
    if (text == "macro") return InfluenceWeight::Macro;
    if (text == "state") return InfluenceWeight::State;
    throw std::invalid_argument(fmt::format("unknown influence weight '{}'", text));
}

double bound_constant(const FiniteMdp& mdp) {
    return mdp.discount() * mdp.max_abs_reward() / (1.0 - mdp.discount());
}

std::vector<double> interpolation_error_bound(const FiniteMdp& mdp, const Partition& partition,
                                              BoundVariant variant) {
    if (partition.n_states() != mdp.n_states()) throw ModelError("partition does not match the MDP");
    const auto n_macros = partition.n_macros();
    const double k = bound_constant(mdp);

    // scratch, indexed by target macro
    std::vector<double> acc(n_macros, 0.0), hi(n_macros), lo(n_macros), dt(n_macros, 0.0);
    std::vector<std::size_t> count(n_macros, 0);
    std::vector<char> in_member(n_macros, 0), in_dt(n_macros, 0);
    std::vector<MacroIndex> member_touched, action_touched, dt_touched;

    std::vector<double> out(n_macros, 0.0);
    for (std::size_t m = 0; m < n_macros; ++m) {
        const auto members = partition.members(m);
        const auto n = members.size();
        if (n < 2) continue;

        double delta_r = 0.0;
        dt_touched.clear();
        for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
            double r_min = std::numeric_limits<double>::infinity();
            double r_max = -r_min;
            action_touched.clear();
            for (auto s : members) {
                r_min = std::min(r_min, mdp.reward(s, a));
                r_max = std::max(r_max, mdp.reward(s, a));

                member_touched.clear();
                for (const auto& [next, p] : mdp.row(s, a)) {
                    const auto t = partition.macro_of(next);
                    if (!in_member[t]) {
                        in_member[t] = 1;
                        member_touched.push_back(t);
                    }
                    acc[t] += p;
                }
                for (auto t : member_touched) {
                    const double mass = acc[t];
                    if (count[t] == 0) {
                        action_touched.push_back(t);
                        hi[t] = lo[t] = mass;
                    } else {
                        hi[t] = std::max(hi[t], mass);
                        lo[t] = std::min(lo[t], mass);
                    }
                    ++count[t];
                    acc[t] = 0.0;
                    in_member[t] = 0;
                }
            }
            delta_r = std::max(delta_r, r_max - r_min);

            for (auto t : action_touched) {
                // members that never reach t contribute mass 0
                const double low = count[t] < n ? std::min(lo[t], 0.0) : lo[t];
                const double range = hi[t] - low;
                if (!in_dt[t]) {
                    in_dt[t] = 1;
                    dt_touched.push_back(t);
                    dt[t] = range;
                } else {
                    dt[t] = std::max(dt[t], range);
                }
                count[t] = 0;
            }
        }

        double delta_t = 0.0;
        for (auto t : dt_touched) {
            delta_t += dt[t];
            dt[t] = 0.0;
            in_dt[t] = 0;
        }
        double bound = delta_r + k * delta_t;
        if (variant == BoundVariant::AsWritten) bound /= static_cast<double>(n);
        out[m] = bound;
    }
    return out;
}

std::vector<double> apply_error_map(const AggregateModel& model, const std::vector<double>& e_int_bar,
                                    const std::vector<double>& f) {
    const double gamma = model.discount();
    std::vector<double> out(model.n_macros());
    for (std::size_t m = 0; m < model.n_macros(); ++m) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < model.n_actions(); ++a) {
            double acc = 0.0;
            for (const auto& [next, p] : model.t_hat(m, a)) acc += p * f[next];
            best = std::max(best, acc);
        }
        out[m] = e_int_bar[m] + gamma * best;
    }
    return out;
}

namespace {

std::vector<double> indicator(const std::vector<bool>& mask) {
    std::vector<double> out(mask.size());
    for (std::size_t m = 0; m < mask.size(); ++m) out[m] = mask[m] ? 1.0 : 0.0;
    return out;
}

double scaled_threshold(double tol, double gamma) {
    return gamma <= 0.0 ? std::numeric_limits<double>::infinity() : tol * (1.0 - gamma) / gamma;
}

void check_macro_vector(const AggregateModel& model, const std::vector<double>& v, const char* what) {
    if (v.size() != model.n_macros())
        throw ModelError(fmt::format("{} has {} entries, model has {} macros", what, v.size(), model.n_macros()));
}

} // namespace

std::vector<double> approximation_error_bound(const AggregateModel& model, const std::vector<double>& e_int_bar,
                                              const BoundOptions& opts) {
    check_macro_vector(model, e_int_bar, "interpolation bound");
    const double threshold = scaled_threshold(opts.tol, model.discount());
    std::vector<double> f(model.n_macros(), 0.0);
    double change = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        auto next = apply_error_map(model, e_int_bar, f);
        change = 0.0;
        for (std::size_t m = 0; m < f.size(); ++m) change = std::max(change, std::abs(next[m] - f[m]));
        f = std::move(next);
        if (change <= threshold) return f;
    }
    throw ConvergenceError("approximation error bound did not converge", opts.max_iter, change);
}

std::vector<ActionIndex> error_policy(const AggregateModel& model, const std::vector<double>& e_app_bar) {
    check_macro_vector(model, e_app_bar, "approximation bound");
    std::vector<ActionIndex> pi(model.n_macros(), 0);
    for (std::size_t m = 0; m < model.n_macros(); ++m) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < model.n_actions(); ++a) {
            double acc = 0.0;
            for (const auto& [next, p] : model.t_hat(m, a)) acc += p * e_app_bar[next];
            // aggregated rows need not sum to exactly 1, so treat rounding-level gaps as ties
            if (a == 0 || acc > best + 1e-12 * std::max(1.0, std::abs(best))) {
                best = acc;
                pi[m] = static_cast<ActionIndex>(a);
            }
        }
    }
    return pi;
}

std::vector<double> apply_influence_map(const AggregateModel& model, const std::vector<double>& source,
                                        const std::vector<ActionIndex>& pi_err, const std::vector<double>& f) {
    const double gamma = model.discount();
    std::vector<double> out = source;
    for (std::size_t src = 0; src < model.n_macros(); ++src) {
        if (f[src] == 0.0) continue;
        for (const auto& [target, p] : model.t_hat(src, pi_err[src])) out[target] += gamma * p * f[src];
    }
    return out;
}

std::vector<double> apply_influence_map(const AggregateModel& model, const std::vector<bool>& s0_mask,
                                        const std::vector<ActionIndex>& pi_err, const std::vector<double>& f) {
    return apply_influence_map(model, indicator(s0_mask), pi_err, f);
}

std::vector<double> influence(const AggregateModel& model, const std::vector<double>& source,
                              const std::vector<ActionIndex>& pi_err, const BoundOptions& opts) {
    if (source.size() != model.n_macros() || pi_err.size() != model.n_macros())
        throw ModelError("influence: source or error policy does not match the model");
    const double threshold = scaled_threshold(opts.tol, model.discount());
    std::vector<double> f(model.n_macros(), 0.0);
    double change = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        auto next = apply_influence_map(model, source, pi_err, f);
        change = 0.0;
        for (std::size_t m = 0; m < f.size(); ++m) change += std::abs(next[m] - f[m]);
        f = std::move(next);
        if (change <= threshold) return f;
    }
    throw ConvergenceError("influence did not converge", opts.max_iter, change);
}

std::vector<double> influence(const AggregateModel& model, const std::vector<bool>& s0_mask,
                              const std::vector<ActionIndex>& pi_err, const BoundOptions& opts) {
    return influence(model, indicator(s0_mask), pi_err, opts);
}

std::vector<double> refinement_scores(const std::vector<double>& e_int_bar, const std::vector<double>& influence) {
    if (e_int_bar.size() != influence.size()) throw ModelError("refinement_scores: size mismatch");
    std::vector<double> out(e_int_bar.size());
    for (std::size_t m = 0; m < out.size(); ++m) out[m] = influence[m] * e_int_bar[m];
    return out;
}

double weighted_error(const Partition& partition, const std::vector<double>& e_app_bar) {
    double acc = 0.0;
    for (std::size_t m = 0; m < partition.n_macros(); ++m)
        acc += static_cast<double>(partition.size_of(m)) * e_app_bar[m];
    return acc / static_cast<double>(partition.n_states());
}

std::vector<bool> region_mask(const Partition& partition, const BoundOptions& opts) {
    if (!opts.s0_states) return std::vector<bool>(partition.n_macros(), true);
    const auto& states = *opts.s0_states;
    if (states.size() != partition.n_states()) throw ModelError("target region does not match the state space");
    std::vector<bool> mask(partition.n_macros(), false);
    for (std::size_t s = 0; s < states.size(); ++s)
        if (states[s]) mask[partition.macro_of(s)] = true;
    return mask;
}

std::vector<double> influence_source(const Partition& partition, const BoundOptions& opts) {
    if (opts.weight == InfluenceWeight::Macro) return indicator(region_mask(partition, opts));
    std::vector<double> source(partition.n_macros(), 0.0);
    double total = 0.0;
    for (std::size_t s = 0; s < partition.n_states(); ++s) {
        if (opts.s0_states && !(*opts.s0_states)[s]) continue;
        source[partition.macro_of(s)] += 1.0;
        total += 1.0;
    }
    if (total > 0.0)
        for (auto& w : source) w /= total;
    return source;
}

ErrorReport error_report(const FiniteMdp& mdp, const Partition& partition, const BoundOptions& opts) {
    const auto model = aggregate_parameters(mdp, partition);
    ErrorReport report;
    report.variant = opts.variant;
    report.k_const = bound_constant(mdp);
    report.e_int_bar = interpolation_error_bound(mdp, partition, opts.variant);
    report.e_app_bar = approximation_error_bound(model, report.e_int_bar, opts);
    report.pi_err = error_policy(model, report.e_app_bar);
    report.influence = influence(model, influence_source(partition, opts), report.pi_err, opts);
    report.score = refinement_scores(report.e_int_bar, report.influence);
    report.scalar_error = weighted_error(partition, report.e_app_bar);
    return report;
}

double module_task_error(const FiniteMdp& mdp, const Partition& partition, const BoundOptions& opts) {
    const auto model = aggregate_parameters(mdp, partition);
    const auto e_int = interpolation_error_bound(mdp, partition, opts.variant);
    return weighted_error(partition, approximation_error_bound(model, e_int, opts));
}

void write_error_report_csv(const ErrorReport& report, const std::filesystem::path& path) {
    CsvWriter out(path, "macro,e_int_bar,e_app_bar,influence,score");
    for (std::size_t m = 0; m < report.e_int_bar.size(); ++m)
        out.row(m, report.e_int_bar[m], report.e_app_bar[m], report.influence[m], report.score[m]);
}

} // namespace modso
