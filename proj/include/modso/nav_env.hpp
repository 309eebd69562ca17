#pragma once

#include "modso/aggregation.hpp"
#include "modso/mdp.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace modso::nav {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Closed axis-aligned rectangle.
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    bool contains(Point p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

struct Circle {
    Point center;
    double radius = 0.0;

    bool contains(Point p) const;
};

/// Whether the closed segment [p, q] meets the closed rectangle.
bool segment_intersects(Point p, Point q, const Rect& r);

struct NavGeometry {
    Rect bounds{0.0, 0.0, 10.0, 10.0};
    std::vector<Rect> walls;
    /// zones[i] is zone i + 1
    std::vector<Circle> zones;

    bool in_wall(Point p) const;
    bool crosses_wall(Point p, Point q) const;
    bool in_bounds(Point p) const;
    /// 1-based zone index containing p, if any.
    std::optional<int> zone_at(Point p) const;
    bool in_zone(int zone, Point p) const;

    std::vector<std::string> check() const;
};

/// Two rooms joined by two corridors through a central wall, six goal zones.
NavGeometry default_geometry();

/// Line records `wall x0 y0 x1 y1` and `zone i cx cy r`; `#` starts a comment.
NavGeometry load_geometry(const std::filesystem::path& path);
void save_geometry(const NavGeometry& geo, const std::filesystem::path& path);

struct NavConfig {
    double cell = 0.1;
    double move_amp = 0.1;
    double noise_amp = 0.03;
    int noise_dirs = 16;
    double discount = 0.95;
    std::size_t episode_cap = 1000;

    std::vector<std::string> check() const;
};

struct TaskSpec {
    int start_zone = 1;
    int goal_zone = 2;
};

/// Unit direction of move `action`; actions 0..7 are E, NE, N, NW, W, SW, S, SE.
Point move_direction(std::size_t action);
inline constexpr std::size_t kActions = 8;

/**
 * Discretization of the free space into square cells. States are the free
 * cells in row-major order followed by one absorbing terminal state.
 */
class NavGrid {
public:
    NavGrid(NavGeometry geo, double cell);

    const NavGeometry& geometry() const noexcept { return geo_; }
    double cell() const noexcept { return cell_; }
    int nx() const noexcept { return nx_; }
    int ny() const noexcept { return ny_; }

    std::size_t n_free() const noexcept { return cells_.size(); }
    std::size_t n_states() const noexcept { return cells_.size() + 1; }
    StateIndex terminal() const noexcept { return static_cast<StateIndex>(cells_.size()); }

    /// Cell coordinates of a non-terminal state.
    std::pair<int, int> cell_of(StateIndex s) const { return cells_[s]; }
    Point center(StateIndex s) const;
    /// State of the free cell containing p, if any.
    std::optional<StateIndex> state_at(Point p) const;
    /// Free cells whose centers lie in the zone.
    std::vector<StateIndex> cells_in_zone(int zone) const;

private:
    NavGeometry geo_;
    double cell_;
    int nx_, ny_;
    std::vector<std::pair<int, int>> cells_;
    std::vector<std::int64_t> index_; // nx*ny, -1 for blocked cells
};

/// One noisy outcome of a move from a cell center.
struct MoveSample {
    enum class Kind { Collision, Goal, Move };
    Kind kind;
    Point end;
};

/// Outcome of moving from `from` along `action` perturbed by noise direction `k`.
MoveSample sample_move(const NavGrid& grid, const NavConfig& cfg, const TaskSpec& task, Point from, std::size_t action,
                       int k);

FiniteMdp build_task_mdp(const NavGrid& grid, const NavConfig& cfg, const TaskSpec& task);
FiniteMdp build_task_mdp(const NavGeometry& geo, const NavConfig& cfg, const TaskSpec& task);

/// Start → goal zones of the six tasks.
std::array<TaskSpec, 6> six_task_specs();

struct NavTasks {
    NavGrid grid;
    std::vector<TaskSpec> specs;
    std::vector<FiniteMdp> mdps;
};

NavTasks make_six_tasks(const NavGeometry& geo, const NavConfig& cfg);

/// All free cells in one macro and the terminal state alone.
Partition blank_partition(const NavGrid& grid);

/// Splits the bounding box of the member cells along its longer side at the cell-count median.
SplitRule longest_axis_median_split(const NavGrid& grid);
/// Random axis (among non-degenerate ones) and random cut position; used for warm-up.
RandomSplitRule random_axis_split(const NavGrid& grid);

struct MacroRect {
    MacroIndex macro;
    Rect rect;
};

/// Bounding rectangles (environment units) of the cell macros.
std::vector<MacroRect> macro_rectangles(const NavGrid& grid, const Partition& partition);
/// Rows `macro_index,x0,y0,x1,y1`.
void write_rectangles_csv(const NavGrid& grid, const Partition& partition, const std::filesystem::path& path);

struct EpisodeResult {
    double reward = 0.0;
    std::size_t steps = 0;
    bool reached = false;
};

/// Rolls out `policy` from `start` with a generator seeded by `seed`; rewards are undiscounted.
EpisodeResult simulate_episode(const FiniteMdp& mdp, const Policy& policy, StateIndex start, std::uint64_t seed,
                               std::size_t cap);

struct Evaluation {
    double mean_reward = 0.0;
    double success_rate = 0.0;
    std::size_t runs = 0;
};

/// Seed stream of the start-cell draws; episode k uses derive_seed(seed, kEpisodeStreamBase + k).
inline constexpr std::uint64_t kStartStream = 0;
inline constexpr std::uint64_t kEpisodeStreamBase = 1;

/// Mean undiscounted return and goal-reaching rate over `runs` episodes from uniform start cells.
Evaluation evaluate(const NavGrid& grid, const FiniteMdp& mdp, const Policy& policy, const TaskSpec& task,
                    std::size_t runs, std::size_t cap, std::uint64_t seed);

} // namespace modso::nav
