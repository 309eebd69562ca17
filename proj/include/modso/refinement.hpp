#pragma once

#include "modso/aggregation.hpp"
#include "modso/error_bounds.hpp"

#include <cstddef>

namespace modso {

struct RefineConfig {
    /// Maximum macro count of the partition after a learn step.
    std::size_t budget = 400;
    std::size_t splits_per_call = 1;
    BoundOptions bounds;
    SplitRule split_rule = median_index_split();
};

struct LearnResult {
    Partition partition;
    /// Report for the returned partition.
    ErrorReport report;
    /// True when no macro could be split.
    bool saturated = false;
    std::size_t splits = 0;
    std::size_t merges = 0;
};

/**
 * One Learn() call: split the splittable macro with the highest positive
 * refinement score (rescoring after every split), then merge the sibling
 * pair with the lowest combined score until the partition fits the budget.
 */
LearnResult learn_step(const FiniteMdp& mdp, const Partition& partition, const RefineConfig& cfg);

} // namespace modso
