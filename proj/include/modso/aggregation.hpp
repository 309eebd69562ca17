#pragma once

#include "modso/mdp.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace modso {

using MacroIndex = std::uint32_t;

/// Two non-empty halves of a macro's member list.
using Bipartition = std::pair<std::vector<StateIndex>, std::vector<StateIndex>>;

/// Proposes a bipartition of a sorted member list, or nothing when the
/// members cannot be split by this rule.
using SplitRule = std::function<std::optional<Bipartition>(std::span<const StateIndex>)>;

/// Seeded variant used for the random warm-up splits of blank modules.
using RandomSplitRule = std::function<std::optional<Bipartition>(std::span<const StateIndex>, std::mt19937_64&)>;

/**
 * Disjoint cover of the state set by macro-states.
 *
 * Splits are recorded in a binary tree so that only siblings can be merged
 * back. A split keeps the first half under the old macro index and appends
 * the second half as a new macro; a merge keeps the lower of the two indices
 * and shifts every higher index down by one.
 */
class Partition {
public:
    Partition() = default;

    /// One macro covering all states.
    static Partition single(std::size_t n_states);
    static Partition singletons(std::size_t n_states);
    /// Macros are the distinct labels of `assignment`, which must be exactly 0..k-1.
    static Partition from_assignment(std::vector<MacroIndex> assignment);

    std::size_t n_states() const noexcept { return assignment_.size(); }
    std::size_t n_macros() const noexcept { return members_.size(); }

    const std::vector<MacroIndex>& assignment() const noexcept { return assignment_; }
    MacroIndex macro_of(std::size_t s) const { return assignment_[s]; }
    std::span<const StateIndex> members(std::size_t macro) const { return members_[macro]; }
    std::size_t size_of(std::size_t macro) const { return members_[macro].size(); }

    bool are_siblings(MacroIndex a, MacroIndex b) const;
    /// Every pair (a, b), a < b, that merge_macros would accept.
    std::vector<std::pair<MacroIndex, MacroIndex>> sibling_pairs() const;

    /// Assignment equality; the split history is not compared.
    friend bool operator==(const Partition& lhs, const Partition& rhs) { return lhs.assignment_ == rhs.assignment_; }

    /// Empty list when every structural invariant holds.
    std::vector<std::string> check() const;

private:
    static constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

    struct Node {
        std::size_t parent = kNoNode;
        std::size_t first_child = kNoNode;
        std::size_t second_child = kNoNode;
    };

    friend std::optional<Partition> split_macro(const Partition&, MacroIndex, const SplitRule&);
    friend std::optional<Partition> merge_macros(const Partition&, MacroIndex, MacroIndex);

    std::vector<MacroIndex> assignment_;
    std::vector<std::vector<StateIndex>> members_;
    std::vector<std::size_t> macro_node_;
    std::vector<Node> nodes_;
};

/// Refuses (nullopt) for singletons and for degenerate or inconsistent splitter output.
std::optional<Partition> split_macro(const Partition& partition, MacroIndex macro, const SplitRule& splitter);

/// Restores the parent of two sibling macros; refuses non-siblings.
std::optional<Partition> merge_macros(const Partition& partition, MacroIndex a, MacroIndex b);

/// Splits a member list in two halves by position (first ⌊n/2⌋ states, rest).
SplitRule median_index_split();
/// Splits a member list at a uniformly drawn position.
RandomSplitRule random_index_split();

/// Aggregated MDP over the macros of a partition.
struct AggregateModel {
    Partition partition;
    /// Macro-level MDP holding R̂, T̂ and the source discount.
    FiniteMdp macro_mdp;
    std::optional<ValueFunction> v_hat;

    double r_hat(std::size_t macro, std::size_t a) const { return macro_mdp.reward(macro, a); }
    std::span<const Successor> t_hat(std::size_t macro, std::size_t a) const { return macro_mdp.row(macro, a); }
    double discount() const noexcept { return macro_mdp.discount(); }
    std::size_t n_macros() const noexcept { return macro_mdp.n_states(); }
    std::size_t n_actions() const noexcept { return macro_mdp.n_actions(); }
};

/// R̂ and T̂ as member averages of R and of the macro-summed rows of T.
AggregateModel aggregate_parameters(const FiniteMdp& mdp, const Partition& partition);

/// Fixed point of the aggregated Bellman operator.
ValueFunction approximate_solve(const AggregateModel& model, const SolveOptions& opts = {});

/// Piecewise-constant extension of a macro-level function to the states.
ValueFunction lift(const ValueFunction& v_macro, const Partition& partition);

/// One-step greedy policy of the source MDP against lift(V̂*); requires `model.v_hat`.
Policy macro_greedy_policy(const FiniteMdp& mdp, const AggregateModel& model);

/**
 * Greedy policy of the aggregate MDP itself, applied to every member state of
 * each macro; requires `model.v_hat`. Unlike macro_greedy_policy it never
 * sees the exact ties that a piecewise-constant value creates between moves
 * staying inside one macro.
 */
Policy lifted_macro_policy(const AggregateModel& model);

/// How a module's solution is executed in the source MDP.
enum class PolicyKind { Lifted, OneStep };
std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view text);

/// Aggregates, solves and returns the requested policy for `mdp` under `partition`.
Policy module_policy(const FiniteMdp& mdp, const Partition& partition, PolicyKind kind, const SolveOptions& opts = {});

/// Rows `state_index,macro_index`.
void write_partition_csv(const Partition& partition, const std::filesystem::path& path);

} // namespace modso
