#pragma once

#include "modso/aggregation.hpp"
#include "modso/mdp.hpp"

#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace modso {

/**
 * Which form of the parameter-variation bounds to use.
 *
 * `AsWritten` divides the reward and transition variation of a macro by its
 * size; `Conservative` keeps the raw max-pair variation, which is what the
 * soundness argument needs.
 */
enum class BoundVariant { AsWritten, Conservative };

/**
 * How the target region enters the influence map. `Macro` counts each
 * region macro once. `State` weights it by its share of region states, which
 * makes the influence the gradient of the state-weighted error.
 */
enum class InfluenceWeight { Macro, State };

std::string_view to_string(BoundVariant v);
BoundVariant parse_bound_variant(std::string_view text);
std::string_view to_string(InfluenceWeight w);
InfluenceWeight parse_influence_weight(std::string_view text);

struct BoundOptions {
    BoundVariant variant = BoundVariant::AsWritten;
    /// sup-norm tolerance of the fixed-point iterations
    double tol = 1e-6;
    std::size_t max_iter = 1000000;
    /// States of the influence target region, one flag per state. A macro is
    /// in the region when any member is. Every macro counts when empty.
    std::optional<std::vector<bool>> s0_states;
    InfluenceWeight weight = InfluenceWeight::Macro;
};

struct ErrorReport {
    std::vector<double> e_int_bar;
    std::vector<double> e_app_bar;
    std::vector<ActionIndex> pi_err;
    std::vector<double> influence;
    std::vector<double> score;
    double scalar_error = 0.0;
    double k_const = 0.0;
    BoundVariant variant = BoundVariant::AsWritten;
};

/// K = γ·Rmax/(1−γ)
double bound_constant(const FiniteMdp& mdp);

/**
 * Per-macro upper bound of the interpolation error:
 * ΔR̄(ŝ) + K·Σ_ŝ₂ ΔT̄(ŝ,ŝ₂), with both variations maximized over actions and
 * over member pairs.
 */
std::vector<double> interpolation_error_bound(const FiniteMdp& mdp, const Partition& partition,
                                              BoundVariant variant);

/// One application of [Ê f](ŝ) = Ē_int(ŝ) + max_a γ Σ T̂(ŝ,a,ŝ') f(ŝ').
std::vector<double> apply_error_map(const AggregateModel& model, const std::vector<double>& e_int_bar,
                                    const std::vector<double>& f);

/// Fixed point of apply_error_map.
std::vector<double> approximation_error_bound(const AggregateModel& model, const std::vector<double>& e_int_bar,
                                              const BoundOptions& opts = {});

/// argmax_a Σ T̂(ŝ,a,ŝ') Ē_app(ŝ'), lowest index on ties (gaps below 1e-12 relative count as ties).
std::vector<ActionIndex> error_policy(const AggregateModel& model, const std::vector<double>& e_app_bar);

/// One application of [D f](ŝ) = 1{ŝ ∈ S0} + γ Σ_ŝ' T̂(ŝ', π_err(ŝ'), ŝ) f(ŝ').
std::vector<double> apply_influence_map(const AggregateModel& model, const std::vector<bool>& s0_mask,
                                        const std::vector<ActionIndex>& pi_err, const std::vector<double>& f);
std::vector<double> apply_influence_map(const AggregateModel& model, const std::vector<double>& source,
                                        const std::vector<ActionIndex>& pi_err, const std::vector<double>& f);

/**
 * Fixed point of apply_influence_map.
 *
 * The map uses transposed rows, so it contracts in the L1 norm rather than
 * the sup norm; iteration stops on the γ-scaled L1 change.
 */
std::vector<double> influence(const AggregateModel& model, const std::vector<bool>& s0_mask,
                              const std::vector<ActionIndex>& pi_err, const BoundOptions& opts = {});
/// Same fixed point with an arbitrary non-negative source term in place of the indicator.
std::vector<double> influence(const AggregateModel& model, const std::vector<double>& source,
                              const std::vector<ActionIndex>& pi_err, const BoundOptions& opts = {});

/// score(ŝ) = I(ŝ)·Ē_int(ŝ)
std::vector<double> refinement_scores(const std::vector<double>& e_int_bar, const std::vector<double>& influence);

/// Σ_ŝ |ŝ|·Ē_app(ŝ) / |S|
double weighted_error(const Partition& partition, const std::vector<double>& e_app_bar);

/// Per-macro flags of the target region described by `opts.s0_states`.
std::vector<bool> region_mask(const Partition& partition, const BoundOptions& opts);

/// Source term of the influence map: region flags, or region state shares under state weighting.
std::vector<double> influence_source(const Partition& partition, const BoundOptions& opts);

/// Full Error() pass: bounds, error policy, influence and scores.

ErrorReport error_report(const FiniteMdp& mdp, const Partition& partition, const BoundOptions& opts = {});

/// Module-task distance: state-weighted mean of Ē_app for the aggregation of `mdp` by `partition`.
double module_task_error(const FiniteMdp& mdp, const Partition& partition, const BoundOptions& opts = {});

/// Rows `macro,e_int_bar,e_app_bar,influence,score`.
void write_error_report_csv(const ErrorReport& report, const std::filesystem::path& path);

} // namespace modso
