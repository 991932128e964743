#ifndef CKTX_GRID_ENV_HPP
#define CKTX_GRID_ENV_HPP

#include <array>
#include <compare>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cktx {

// Grid coordinates are (row, col); row 0 is the top edge, col 0 the left edge.
struct Cell {
    int row = 0;
    int col = 0;

    auto operator<=>(const Cell&) const = default;
};

enum class Action { Up, Down, Left, Right };

inline constexpr std::array<Action, 4> kActions = {Action::Up, Action::Down, Action::Left,
                                                   Action::Right};

char action_to_char(Action a);
std::optional<Action> action_from_char(char c);

// Displacement of one step: Up/Down change the row, Left/Right the column.
Cell displaced(Cell from, Action a);

struct StepOutcome {
    Cell next_state;
    double reward = 0.0;
    bool collided = false;
    bool done = false;
};

// The discrete environment. Immutable after construction; the constructor
// validates bounds, start/goal placement and start->goal reachability.
class GridSpec {
public:
    GridSpec(int width, int height, std::set<Cell> obstacles, Cell start, Cell goal);

    int width() const { return width_; }
    int height() const { return height_; }
    Cell start() const { return start_; }
    Cell goal() const { return goal_; }
    const std::set<Cell>& obstacles() const { return obstacles_; }

    bool in_bounds(Cell c) const {
        return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
    }
    bool is_obstacle(Cell c) const { return obstacles_.count(c) > 0; }
    bool is_free(Cell c) const { return in_bounds(c) && !is_obstacle(c); }

    int cell_index(Cell c) const { return c.row * width_ + c.col; }
    int cell_count() const { return width_ * height_; }

    // Same bounds and obstacles, different start/goal; revalidates.
    GridSpec with_task(Cell start, Cell goal) const;

private:
    int width_;
    int height_;
    std::set<Cell> obstacles_;
    Cell start_;
    Cell goal_;
};

enum class ScenarioKind { None, Wall, ReverseU, U, Superposition };

std::string scenario_kind_name(ScenarioKind k);
std::optional<ScenarioKind> scenario_kind_from_name(const std::string& name);

// Barrier geometry parameters. The bar is a horizontal run of `length` cells
// starting at `anchor`; ReverseU/U add vertical arms of `arm_length` cells at
// both bar ends, on the side the pocket opens away from: ReverseU arms grow
// downward (pocket opens down), U arms grow upward (pocket opens up, i.e.
// toward an agent approaching from above).
struct ScenarioParams {
    Cell anchor;
    int length = 0;
    int arm_length = 0;
};

struct ObstacleScenario {
    ScenarioKind kind = ScenarioKind::None;
    std::set<Cell> cells;
    ScenarioParams params;
};

// Generates the cell set for one barrier geometry and validates it against
// the grid's bounds, start/goal and reachability. Superposition is the union
// of the Wall, ReverseU and U sets built from the same params.
ObstacleScenario build_scenario(ScenarioKind kind, const ScenarioParams& params,
                                const GridSpec& grid);

// One environment transition. Pure function of (grid, state, action); stepping
// from the goal is an error (the episode is already terminal).
StepOutcome step(const GridSpec& grid, Cell state, Action action);

// BFS shortest-path step count from `from` to `to` avoiding obstacles.
// Returns -1 when unreachable.
int shortest_path_length(const GridSpec& grid, Cell from, Cell to);

// L_opt: the oracle path length between the grid's own start and goal.
int optimal_path_length(const GridSpec& grid);

} // namespace cktx

#endif
