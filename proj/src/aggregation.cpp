#include "modso/aggregation.hpp"

#include "modso/csv.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace modso {

Partition Partition::single(std::size_t n_states) {
    return from_assignment(std::vector<MacroIndex>(n_states, 0));
}

Partition Partition::singletons(std::size_t n_states) {
    std::vector<MacroIndex> assignment(n_states);
    std::iota(assignment.begin(), assignment.end(), MacroIndex{0});
    return from_assignment(std::move(assignment));
}

Partition Partition::from_assignment(std::vector<MacroIndex> assignment) {
    if (assignment.empty()) throw ModelError("partition of an empty state set");
    const std::size_t n_macros = *std::max_element(assignment.begin(), assignment.end()) + std::size_t{1};

    Partition p;
    p.members_.resize(n_macros);
    for (std::size_t s = 0; s < assignment.size(); ++s) p.members_[assignment[s]].push_back(static_cast<StateIndex>(s));
    for (std::size_t m = 0; m < n_macros; ++m)
        if (p.members_[m].empty()) throw ModelError(fmt::format("macro {} is empty", m));
    p.assignment_ = std::move(assignment);
    p.nodes_.resize(n_macros);
    p.macro_node_.resize(n_macros);
    std::iota(p.macro_node_.begin(), p.macro_node_.end(), std::size_t{0});
    return p;
}

bool Partition::are_siblings(MacroIndex a, MacroIndex b) const {
    if (a == b || a >= n_macros() || b >= n_macros()) return false;
    const auto& na = nodes_[macro_node_[a]];
    const auto& nb = nodes_[macro_node_[b]];
    return na.parent != kNoNode && na.parent == nb.parent;
}

std::vector<std::pair<MacroIndex, MacroIndex>> Partition::sibling_pairs() const {
    // node id -> macro for current leaves
    std::vector<std::pair<std::size_t, MacroIndex>> by_parent;
    for (MacroIndex m = 0; m < n_macros(); ++m) {
        const auto parent = nodes_[macro_node_[m]].parent;
        if (parent != kNoNode) by_parent.emplace_back(parent, m);
    }
    std::sort(by_parent.begin(), by_parent.end());
    std::vector<std::pair<MacroIndex, MacroIndex>> pairs;
    for (std::size_t i = 0; i + 1 < by_parent.size(); ++i)
        if (by_parent[i].first == by_parent[i + 1].first) pairs.emplace_back(by_parent[i].second, by_parent[i + 1].second);
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

std::vector<std::string> Partition::check() const {
    std::vector<std::string> issues;
    std::vector<std::size_t> count(n_states(), 0);
    for (std::size_t m = 0; m < n_macros(); ++m) {
        if (members_[m].empty()) issues.push_back(fmt::format("macro {} is empty", m));
        if (!std::is_sorted(members_[m].begin(), members_[m].end()))
            issues.push_back(fmt::format("members of macro {} are not sorted", m));
        for (auto s : members_[m]) {
            if (s >= n_states()) {
                issues.push_back(fmt::format("macro {} lists unknown state {}", m, s));
                continue;
            }
            ++count[s];
            if (assignment_[s] != m)
                issues.push_back(fmt::format("state {} listed in macro {} but assigned to {}", s, m, assignment_[s]));
        }
    }
    for (std::size_t s = 0; s < n_states(); ++s)
        if (count[s] != 1) issues.push_back(fmt::format("state {} belongs to {} macros", s, count[s]));
    return issues;
}

std::optional<Partition> split_macro(const Partition& partition, MacroIndex macro, const SplitRule& splitter) {
    if (macro >= partition.n_macros()) return std::nullopt;
    const auto members = partition.members(macro);
    if (members.size() < 2) return std::nullopt;

    auto halves = splitter(members);
    if (!halves) return std::nullopt;
    auto& [first, second] = *halves;
    if (first.empty() || second.empty() || first.size() + second.size() != members.size()) return std::nullopt;
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    std::vector<StateIndex> merged;
    std::merge(first.begin(), first.end(), second.begin(), second.end(), std::back_inserter(merged));
    if (!std::equal(merged.begin(), merged.end(), members.begin(), members.end())) return std::nullopt;

    Partition out = partition;
    const auto new_macro = static_cast<MacroIndex>(out.n_macros());
    for (auto s : second) out.assignment_[s] = new_macro;
    out.members_[macro] = std::move(first);
    out.members_.push_back(std::move(second));

    const auto parent = out.macro_node_[macro];
    const auto c0 = out.nodes_.size();
    out.nodes_.push_back({parent, Partition::kNoNode, Partition::kNoNode});
    out.nodes_.push_back({parent, Partition::kNoNode, Partition::kNoNode});
    out.nodes_[parent].first_child = c0;
    out.nodes_[parent].second_child = c0 + 1;
    out.macro_node_[macro] = c0;
    out.macro_node_.push_back(c0 + 1);
    return out;
}

std::optional<Partition> merge_macros(const Partition& partition, MacroIndex a, MacroIndex b) {
    if (!partition.are_siblings(a, b)) return std::nullopt;
    const MacroIndex keep = std::min(a, b);
    const MacroIndex drop = std::max(a, b);

    Partition out = partition;
    const auto parent = out.nodes_[out.macro_node_[keep]].parent;
    out.nodes_[parent].first_child = Partition::kNoNode;
    out.nodes_[parent].second_child = Partition::kNoNode;

    std::vector<StateIndex> joined;
    std::merge(out.members_[keep].begin(), out.members_[keep].end(), out.members_[drop].begin(),
               out.members_[drop].end(), std::back_inserter(joined));
    out.members_[keep] = std::move(joined);
    out.members_.erase(out.members_.begin() + drop);
    out.macro_node_[keep] = parent;
    out.macro_node_.erase(out.macro_node_.begin() + drop);

    for (auto& m : out.assignment_) {
        if (m == drop) m = keep;
        else if (m > drop) --m;
    }
    return out;
}

SplitRule median_index_split() {
    return [](std::span<const StateIndex> members) -> std::optional<Bipartition> {
        if (members.size() < 2) return std::nullopt;
        const auto half = members.size() / 2;
        return Bipartition{{members.begin(), members.begin() + half}, {members.begin() + half, members.end()}};
    };
}

RandomSplitRule random_index_split() {
    return [](std::span<const StateIndex> members, std::mt19937_64& rng) -> std::optional<Bipartition> {
        if (members.size() < 2) return std::nullopt;
        std::uniform_int_distribution<std::size_t> cut_dist(1, members.size() - 1);
        const auto cut = cut_dist(rng);
        return Bipartition{{members.begin(), members.begin() + cut}, {members.begin() + cut, members.end()}};
    };
}

AggregateModel aggregate_parameters(const FiniteMdp& mdp, const Partition& partition) {
    if (partition.n_states() != mdp.n_states())
        throw ModelError(fmt::format("partition covers {} states, MDP has {}", partition.n_states(), mdp.n_states()));

    const auto n_macros = partition.n_macros();
    const auto n_actions = mdp.n_actions();
    std::vector<std::vector<Successor>> rows(n_macros * n_actions);
    std::vector<double> rewards(n_macros * n_actions, 0.0);

    std::vector<double> acc(n_macros, 0.0);
    std::vector<MacroIndex> touched;
    for (std::size_t m = 0; m < n_macros; ++m) {
        const auto members = partition.members(m);
        if (members.empty()) throw ModelError(fmt::format("macro {} is empty", m));
        const double weight = 1.0 / static_cast<double>(members.size());
        for (std::size_t a = 0; a < n_actions; ++a) {
            double r = 0.0;
            touched.clear();
            for (auto s : members) {
                r += mdp.reward(s, a);
                for (const auto& [next, p] : mdp.row(s, a)) {
                    const auto target = partition.macro_of(next);
                    if (acc[target] == 0.0) touched.push_back(target);
                    acc[target] += p;
                }
            }
            // zero-probability entries may leave duplicates in `touched`
            std::sort(touched.begin(), touched.end());
            touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
            auto& row = rows[m * n_actions + a];
            row.reserve(touched.size());
            for (auto target : touched) {
                if (acc[target] > 0.0) row.push_back({target, acc[target] * weight});
                acc[target] = 0.0;
            }
            rewards[m * n_actions + a] = r * weight;
        }
    }
    return AggregateModel{partition, FiniteMdp(n_macros, n_actions, mdp.discount(), rows, std::move(rewards)),
                          std::nullopt};
}

ValueFunction approximate_solve(const AggregateModel& model, const SolveOptions& opts) {
    return value_iteration(model.macro_mdp, opts).values;
}

ValueFunction lift(const ValueFunction& v_macro, const Partition& partition) {
    if (v_macro.size() != partition.n_macros())
        throw ModelError(fmt::format("macro function has {} entries, partition has {} macros", v_macro.size(),
                                     partition.n_macros()));
    ValueFunction out(partition.n_states());
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = v_macro[partition.macro_of(s)];
    return out;
}

Policy macro_greedy_policy(const FiniteMdp& mdp, const AggregateModel& model) {
    if (!model.v_hat) throw ModelError("macro_greedy_policy needs a solved aggregate model");
    return greedy_policy(mdp, lift(*model.v_hat, model.partition));
}

Policy lifted_macro_policy(const AggregateModel& model) {
    if (!model.v_hat) throw ModelError("lifted_macro_policy needs a solved aggregate model");
    const auto macro_policy = greedy_policy(model.macro_mdp, *model.v_hat);
    Policy out(model.partition.n_states());
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = macro_policy[model.partition.macro_of(s)];
    return out;
}

std::string_view to_string(PolicyKind kind) { return kind == PolicyKind::Lifted ? "lifted" : "one-step"; }

PolicyKind parse_policy_kind(std::string_view text) {
    if (text == "lifted") return PolicyKind::Lifted;
    if (text == "one-step") return PolicyKind::OneStep;
    throw std::invalid_argument(fmt::format("unknown policy kind '{}'", text));
}

Policy module_policy(const FiniteMdp& mdp, const Partition& partition, PolicyKind kind, const SolveOptions& opts) {
    auto model = aggregate_parameters(mdp, partition);
    model.v_hat = approximate_solve(model, opts);
    return kind == PolicyKind::Lifted ? lifted_macro_policy(model) : macro_greedy_policy(mdp, model);
}

void write_partition_csv(const Partition& partition, const std::filesystem::path& path) {
    CsvWriter out(path, "state_index,macro_index");
    for (std::size_t s = 0; s < partition.n_states(); ++s) out.row(s, partition.macro_of(s));
}

} // namespace modso
