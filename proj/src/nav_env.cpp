#include "modso/nav_env.hpp"

#include "modso/csv.hpp"
#include "modso/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <fmt/format.h>

namespace modso::nav {

bool Circle::contains(Point p) const {
    const double dx = p.x - center.x, dy = p.y - center.y;
    return dx * dx + dy * dy <= radius * radius;
}

bool segment_intersects(Point p, Point q, const Rect& r) {
    // Liang-Barsky clipping of the parametric segment p + t (q - p), t in [0, 1]
    const double dx = q.x - p.x, dy = q.y - p.y;
    const double num[4] = {-dx, dx, -dy, dy};
    const double bound[4] = {p.x - r.x0, r.x1 - p.x, p.y - r.y0, r.y1 - p.y};
    double t0 = 0.0, t1 = 1.0;
    for (int i = 0; i < 4; ++i) {
        if (num[i] == 0.0) {
            if (bound[i] < 0.0) return false;
            continue;
        }
        const double t = bound[i] / num[i];
        if (num[i] < 0.0) t0 = std::max(t0, t);
        else t1 = std::min(t1, t);
        if (t0 > t1) return false;
    }
    return true;
}

bool NavGeometry::in_wall(Point p) const {
    return std::any_of(walls.begin(), walls.end(), [&](const Rect& w) { return w.contains(p); });
}

bool NavGeometry::crosses_wall(Point p, Point q) const {
    return std::any_of(walls.begin(), walls.end(), [&](const Rect& w) { return segment_intersects(p, q, w); });
}

bool NavGeometry::in_bounds(Point p) const {
    return p.x > bounds.x0 && p.x < bounds.x1 && p.y > bounds.y0 && p.y < bounds.y1;
}

std::optional<int> NavGeometry::zone_at(Point p) const {
    for (std::size_t i = 0; i < zones.size(); ++i)
        if (zones[i].contains(p)) return static_cast<int>(i) + 1;
    return std::nullopt;
}

bool NavGeometry::in_zone(int zone, Point p) const {
    if (zone < 1 || zone > static_cast<int>(zones.size())) return false;
    return zones[static_cast<std::size_t>(zone) - 1].contains(p);
}

std::vector<std::string> NavGeometry::check() const {
    std::vector<std::string> issues;
    if (!(bounds.x1 > bounds.x0 && bounds.y1 > bounds.y0)) issues.emplace_back("empty bounds");
    for (std::size_t i = 0; i < walls.size(); ++i) {
        const auto& w = walls[i];
        if (!(w.x0 <= w.x1 && w.y0 <= w.y1)) issues.push_back(fmt::format("wall {} has inverted corners", i));
        if (w.x0 < bounds.x0 || w.x1 > bounds.x1 || w.y0 < bounds.y0 || w.y1 > bounds.y1)
            issues.push_back(fmt::format("wall {} leaves the bounds", i));
    }
    for (std::size_t i = 0; i < zones.size(); ++i) {
        const auto& z = zones[i];
        if (!(z.radius > 0.0)) issues.push_back(fmt::format("zone {} has no area", i + 1));
        if (z.center.x - z.radius < bounds.x0 || z.center.x + z.radius > bounds.x1 ||
            z.center.y - z.radius < bounds.y0 || z.center.y + z.radius > bounds.y1)
            issues.push_back(fmt::format("zone {} leaves the bounds", i + 1));
        for (std::size_t k = 0; k < walls.size(); ++k) {
            const auto& w = walls[k];
            const double nx = std::clamp(z.center.x, w.x0, w.x1);
            const double ny = std::clamp(z.center.y, w.y0, w.y1);
            if (z.contains({nx, ny})) issues.push_back(fmt::format("zone {} intersects wall {}", i + 1, k));
        }
    }
    return issues;
}

NavGeometry default_geometry() {
    NavGeometry geo;
    // central wall with corridor openings at y in [2,3] and [7,8]
    geo.walls = {{4.9, 0.0, 5.1, 2.0}, {4.9, 3.0, 5.1, 7.0}, {4.9, 8.0, 5.1, 10.0}};
    geo.zones = {
        {{1.5, 8.5}, 0.5}, {{1.5, 1.5}, 0.5}, {{4.0, 2.5}, 0.5},
        {{8.5, 1.5}, 0.5}, {{8.5, 8.5}, 0.5}, {{4.0, 7.5}, 0.5},
    };
    return geo;
}

NavGeometry load_geometry(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open geometry file " + path.string());
    NavGeometry geo;
    std::map<int, Circle> zones;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string kind;
        if (!(ss >> kind)) continue;
        if (kind == "wall") {
            Rect r;
            if (!(ss >> r.x0 >> r.y0 >> r.x1 >> r.y1))
                throw std::runtime_error(fmt::format("{}:{}: malformed wall record", path.string(), line_no));
            geo.walls.push_back(r);
        } else if (kind == "zone") {
            int idx = 0;
            Circle c;
            if (!(ss >> idx >> c.center.x >> c.center.y >> c.radius))
                throw std::runtime_error(fmt::format("{}:{}: malformed zone record", path.string(), line_no));
            if (!zones.emplace(idx, c).second)
                throw std::runtime_error(fmt::format("{}:{}: duplicate zone {}", path.string(), line_no, idx));
        } else {
            throw std::runtime_error(fmt::format("{}:{}: unknown record '{}'", path.string(), line_no, kind));
        }
    }
    int expected = 1;
    for (const auto& [idx, c] : zones) {
        if (idx != expected++) throw std::runtime_error("zone indices must be 1..n without gaps");
        geo.zones.push_back(c);
    }
    if (auto issues = geo.check(); !issues.empty())
        throw std::runtime_error("invalid geometry: " + issues.front());
    return geo;
}

void save_geometry(const NavGeometry& geo, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "# wall x0 y0 x1 y1\n";
    for (const auto& w : geo.walls) out << fmt::format("wall {} {} {} {}\n", w.x0, w.y0, w.x1, w.y1);
    out << "# zone i cx cy r\n";
    for (std::size_t i = 0; i < geo.zones.size(); ++i)
        out << fmt::format("zone {} {} {} {}\n", i + 1, geo.zones[i].center.x, geo.zones[i].center.y,
                           geo.zones[i].radius);
}

std::vector<std::string> NavConfig::check() const {
    std::vector<std::string> issues;
    if (!(cell > 0.0)) issues.emplace_back("cell must be positive");
    if (!(move_amp > 0.0)) issues.emplace_back("move amplitude must be positive");
    if (!(noise_amp >= 0.0)) issues.emplace_back("noise amplitude must be non-negative");
    if (noise_dirs < 1) issues.emplace_back("noise_dirs must be >= 1");
    if (!(discount >= 0.0 && discount < 1.0)) issues.emplace_back("discount must lie in [0, 1)");
    if (episode_cap < 1) issues.emplace_back("episode cap must be >= 1");
    return issues;
}

Point move_direction(std::size_t action) {
    static const Point dirs[kActions] = {
        {1.0, 0.0}, {std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2}, {0.0, 1.0},
        {-std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2}, {-1.0, 0.0},
        {-std::numbers::sqrt2 / 2, -std::numbers::sqrt2 / 2}, {0.0, -1.0},
        {std::numbers::sqrt2 / 2, -std::numbers::sqrt2 / 2},
    };
    return dirs[action];
}

NavGrid::NavGrid(NavGeometry geo, double cell) : geo_(std::move(geo)), cell_(cell) {
    if (!(cell > 0.0)) throw ModelError("cell size must be positive");
    nx_ = static_cast<int>(std::lround((geo_.bounds.x1 - geo_.bounds.x0) / cell));
    ny_ = static_cast<int>(std::lround((geo_.bounds.y1 - geo_.bounds.y0) / cell));
    if (nx_ < 1 || ny_ < 1) throw ModelError("grid has no cells");
    index_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_), -1);
    for (int j = 0; j < ny_; ++j) {
        for (int i = 0; i < nx_; ++i) {
            const Point c{geo_.bounds.x0 + (i + 0.5) * cell_, geo_.bounds.y0 + (j + 0.5) * cell_};
            if (geo_.in_wall(c)) continue;
            index_[static_cast<std::size_t>(j) * nx_ + i] = static_cast<std::int64_t>(cells_.size());
            cells_.emplace_back(i, j);
        }
    }
    if (cells_.empty()) throw ModelError("geometry leaves no free cell");
}

Point NavGrid::center(StateIndex s) const {
    const auto [i, j] = cells_[s];
    return {geo_.bounds.x0 + (i + 0.5) * cell_, geo_.bounds.y0 + (j + 0.5) * cell_};
}

std::optional<StateIndex> NavGrid::state_at(Point p) const {
    if (!geo_.in_bounds(p)) return std::nullopt;
    const int i = std::clamp(static_cast<int>(std::floor((p.x - geo_.bounds.x0) / cell_)), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor((p.y - geo_.bounds.y0) / cell_)), 0, ny_ - 1);
    const auto idx = index_[static_cast<std::size_t>(j) * nx_ + i];
    if (idx < 0) return std::nullopt;
    return static_cast<StateIndex>(idx);
}

std::vector<StateIndex> NavGrid::cells_in_zone(int zone) const {
    std::vector<StateIndex> out;
    for (StateIndex s = 0; s < cells_.size(); ++s)
        if (geo_.in_zone(zone, center(s))) out.push_back(s);
    return out;
}

MoveSample sample_move(const NavGrid& grid, const NavConfig& cfg, const TaskSpec& task, Point from, std::size_t action,
                       int k) {
    const auto dir = move_direction(action);
    const double theta = 2.0 * std::numbers::pi * k / cfg.noise_dirs;
    const Point end{from.x + cfg.move_amp * dir.x + cfg.noise_amp * std::cos(theta),
                    from.y + cfg.move_amp * dir.y + cfg.noise_amp * std::sin(theta)};
    const auto& geo = grid.geometry();
    if (!geo.in_bounds(end) || geo.crosses_wall(from, end) || !grid.state_at(end))
        return {MoveSample::Kind::Collision, from};
    if (geo.in_zone(task.goal_zone, end)) return {MoveSample::Kind::Goal, end};
    return {MoveSample::Kind::Move, end};
}

FiniteMdp build_task_mdp(const NavGrid& grid, const NavConfig& cfg, const TaskSpec& task) {
    if (auto issues = cfg.check(); !issues.empty()) throw ModelError("invalid navigation config: " + issues.front());
    const auto n_zones = static_cast<int>(grid.geometry().zones.size());
    if (task.goal_zone < 1 || task.goal_zone > n_zones || task.start_zone < 1 || task.start_zone > n_zones ||
        task.start_zone == task.goal_zone)
        throw ModelError(fmt::format("invalid task {} -> {}", task.start_zone, task.goal_zone));

    const auto n_states = grid.n_states();
    const auto terminal = grid.terminal();
    std::vector<std::vector<Successor>> rows(n_states * kActions);
    std::vector<double> rewards(n_states * kActions, 0.0);
    const double mass = 1.0 / cfg.noise_dirs;

    std::map<StateIndex, int> counts;
    for (StateIndex s = 0; s < grid.n_free(); ++s) {
        const Point from = grid.center(s);
        for (std::size_t a = 0; a < kActions; ++a) {
            counts.clear();
            int reward_sum = 0;
            for (int k = 0; k < cfg.noise_dirs; ++k) {
                const auto sample = sample_move(grid, cfg, task, from, a, k);
                switch (sample.kind) {
                case MoveSample::Kind::Collision:
                    --reward_sum;
                    ++counts[s];
                    break;
                case MoveSample::Kind::Goal:
                    ++reward_sum;
                    ++counts[terminal];
                    break;
                case MoveSample::Kind::Move:
                    ++counts[*grid.state_at(sample.end)];
                    break;
                }
            }
            auto& row = rows[s * kActions + a];
            for (const auto& [next, c] : counts) row.push_back({next, c * mass});
            rewards[s * kActions + a] = static_cast<double>(reward_sum) / cfg.noise_dirs;
        }
    }
    for (std::size_t a = 0; a < kActions; ++a) rows[terminal * kActions + a] = {{terminal, 1.0}};
    return FiniteMdp(n_states, kActions, cfg.discount, rows, std::move(rewards));
}

FiniteMdp build_task_mdp(const NavGeometry& geo, const NavConfig& cfg, const TaskSpec& task) {
    return build_task_mdp(NavGrid(geo, cfg.cell), cfg, task);
}

std::array<TaskSpec, 6> six_task_specs() {
    return {{{2, 1}, {3, 2}, {4, 3}, {5, 4}, {6, 5}, {1, 6}}};
}

NavTasks make_six_tasks(const NavGeometry& geo, const NavConfig& cfg) {
    NavTasks tasks{NavGrid(geo, cfg.cell), {}, {}};
    for (const auto& spec : six_task_specs()) {
        tasks.specs.push_back(spec);
        tasks.mdps.push_back(build_task_mdp(tasks.grid, cfg, spec));
    }
    return tasks;
}

Partition blank_partition(const NavGrid& grid) {
    std::vector<MacroIndex> assignment(grid.n_states(), 0);
    assignment[grid.terminal()] = 1;
    return Partition::from_assignment(std::move(assignment));
}

namespace {

struct AxisCuts {
    /// distinct coordinate values, ascending
    std::vector<int> values;
    /// number of members strictly below each value
    std::vector<std::size_t> below;
};

AxisCuts axis_cuts(const NavGrid& grid, std::span<const StateIndex> members, int axis) {
    std::vector<int> coords;
    coords.reserve(members.size());
    for (auto s : members) {
        const auto [i, j] = grid.cell_of(s);
        coords.push_back(axis == 0 ? i : j);
    }
    std::sort(coords.begin(), coords.end());
    AxisCuts cuts;
    for (std::size_t k = 0; k < coords.size(); ++k) {
        if (k == 0 || coords[k] != coords[k - 1]) {
            cuts.values.push_back(coords[k]);
            cuts.below.push_back(k);
        }
    }
    return cuts;
}

bool has_terminal(const NavGrid& grid, std::span<const StateIndex> members) {
    return std::find(members.begin(), members.end(), grid.terminal()) != members.end();
}

Bipartition cut_members(const NavGrid& grid, std::span<const StateIndex> members, int axis, int value) {
    Bipartition out;
    for (auto s : members) {
        const auto [i, j] = grid.cell_of(s);
        ((axis == 0 ? i : j) < value ? out.first : out.second).push_back(s);
    }
    return out;
}

} // namespace

SplitRule longest_axis_median_split(const NavGrid& grid) {
    return [&grid](std::span<const StateIndex> members) -> std::optional<Bipartition> {
        if (members.size() < 2 || has_terminal(grid, members)) return std::nullopt;
        const auto cx = axis_cuts(grid, members, 0);
        const auto cy = axis_cuts(grid, members, 1);
        const int extent_x = cx.values.back() - cx.values.front() + 1;
        const int extent_y = cy.values.back() - cy.values.front() + 1;
        const int axes[2] = {extent_x >= extent_y ? 0 : 1, extent_x >= extent_y ? 1 : 0};
        for (int axis : axes) {
            const auto& cuts = axis == 0 ? cx : cy;
            if (cuts.values.size() < 2) continue;
            const double half = members.size() / 2.0;
            std::size_t best = 1;
            for (std::size_t k = 2; k < cuts.values.size(); ++k)
                if (std::abs(cuts.below[k] - half) < std::abs(cuts.below[best] - half)) best = k;
            return cut_members(grid, members, axis, cuts.values[best]);
        }
        return std::nullopt;
    };
}

RandomSplitRule random_axis_split(const NavGrid& grid) {
    return [&grid](std::span<const StateIndex> members, std::mt19937_64& rng) -> std::optional<Bipartition> {
        if (members.size() < 2 || has_terminal(grid, members)) return std::nullopt;
        std::vector<std::pair<int, AxisCuts>> usable;
        for (int axis = 0; axis < 2; ++axis) {
            auto cuts = axis_cuts(grid, members, axis);
            if (cuts.values.size() >= 2) usable.emplace_back(axis, std::move(cuts));
        }
        if (usable.empty()) return std::nullopt;
        std::uniform_int_distribution<std::size_t> pick_axis(0, usable.size() - 1);
        const auto& [axis, cuts] = usable[pick_axis(rng)];
        std::uniform_int_distribution<std::size_t> pick_cut(1, cuts.values.size() - 1);
        return cut_members(grid, members, axis, cuts.values[pick_cut(rng)]);
    };
}

std::vector<MacroRect> macro_rectangles(const NavGrid& grid, const Partition& partition) {
    std::vector<MacroRect> out;
    const auto& b = grid.geometry().bounds;
    for (MacroIndex m = 0; m < partition.n_macros(); ++m) {
        const auto members = partition.members(m);
        if (has_terminal(grid, members)) continue;
        int i0 = grid.nx(), j0 = grid.ny(), i1 = -1, j1 = -1;
        for (auto s : members) {
            const auto [i, j] = grid.cell_of(s);
            i0 = std::min(i0, i);
            i1 = std::max(i1, i);
            j0 = std::min(j0, j);
            j1 = std::max(j1, j);
        }
        out.push_back({m, {b.x0 + i0 * grid.cell(), b.y0 + j0 * grid.cell(), b.x0 + (i1 + 1) * grid.cell(),
                           b.y0 + (j1 + 1) * grid.cell()}});
    }
    return out;
}

void write_rectangles_csv(const NavGrid& grid, const Partition& partition, const std::filesystem::path& path) {
    CsvWriter out(path, "macro_index,x0,y0,x1,y1");
    for (const auto& [m, r] : macro_rectangles(grid, partition)) out.row(m, r.x0, r.y0, r.x1, r.y1);
}

EpisodeResult simulate_episode(const FiniteMdp& mdp, const Policy& policy, StateIndex start, std::uint64_t seed,
                               std::size_t cap) {
    // build_task_mdp places the absorbing terminal state last
    const auto terminal = static_cast<StateIndex>(mdp.n_states() - 1);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    EpisodeResult result;
    StateIndex s = start;
    while (result.steps < cap && s != terminal) {
        const auto a = policy[s];
        result.reward += mdp.reward(s, a);
        const auto row = mdp.row(s, a);
        double u = unit(rng);
        StateIndex next = row.back().state;
        for (const auto& [candidate, p] : row) {
            if (u < p) {
                next = candidate;
                break;
            }
            u -= p;
        }
        s = next;
        ++result.steps;
    }
    result.reached = s == terminal;
    return result;
}

Evaluation evaluate(const NavGrid& grid, const FiniteMdp& mdp, const Policy& policy, const TaskSpec& task,
                    std::size_t runs, std::size_t cap, std::uint64_t seed) {
    if (runs == 0) throw std::invalid_argument("evaluate: runs must be >= 1");
    const auto starts = grid.cells_in_zone(task.start_zone);
    if (starts.empty()) throw ModelError(fmt::format("start zone {} contains no free cell", task.start_zone));

    std::mt19937_64 start_rng(derive_seed(seed, kStartStream));
    std::uniform_int_distribution<std::size_t> pick(0, starts.size() - 1);
    double total = 0.0;
    std::size_t reached = 0;
    for (std::size_t k = 0; k < runs; ++k) {
        const auto start = starts[pick(start_rng)];
        const auto ep = simulate_episode(mdp, policy, start, derive_seed(seed, kEpisodeStreamBase + k), cap);
        total += ep.reward;
        reached += ep.reached ? 1 : 0;
    }
    return {total / static_cast<double>(runs), static_cast<double>(reached) / static_cast<double>(runs), runs};
}

} // namespace modso::nav
