#include "modso/refinement.hpp"

#include <algorithm>
#include <stdexcept>

namespace modso {

LearnResult learn_step(const FiniteMdp& mdp, const Partition& partition, const RefineConfig& cfg) {
    if (cfg.budget < 1 || cfg.splits_per_call < 1) throw std::invalid_argument("learn_step: budget and splits_per_call must be >= 1");

    LearnResult result{partition, error_report(mdp, partition, cfg.bounds), false, 0, 0};

    for (std::size_t k = 0; k < cfg.splits_per_call; ++k) {
        const auto& scores = result.report.score;
        std::vector<MacroIndex> order;
        for (MacroIndex m = 0; m < result.partition.n_macros(); ++m)
            if (scores[m] > 0.0 && result.partition.size_of(m) >= 2) order.push_back(m);
        // highest score first, lowest index on ties
        std::stable_sort(order.begin(), order.end(), [&](MacroIndex a, MacroIndex b) { return scores[a] > scores[b]; });

        std::optional<Partition> next;
        for (auto m : order) {
            next = split_macro(result.partition, m, cfg.split_rule);
            if (next) break;
        }
        if (!next) {
            result.saturated = result.splits == 0;
            break;
        }
        result.partition = std::move(*next);
        result.report = error_report(mdp, result.partition, cfg.bounds);
        ++result.splits;
    }

    while (result.partition.n_macros() > cfg.budget) {
        const auto pairs = result.partition.sibling_pairs();
        if (pairs.empty()) break;
        const auto& scores = result.report.score;
        auto best = pairs.front();
        double best_score = scores[best.first] + scores[best.second];
        for (const auto& pr : pairs) {
            const double combined = scores[pr.first] + scores[pr.second];
            if (combined < best_score) {
                best_score = combined;
                best = pr;
            }
        }
        result.partition = *merge_macros(result.partition, best.first, best.second);
        result.report = error_report(mdp, result.partition, cfg.bounds);
        ++result.merges;
    }
    return result;
}

} // namespace modso
