#include "cktx/grid_env.hpp"

#include <deque>
#include <stdexcept>

namespace cktx {

char action_to_char(Action a) {
    switch (a) {
    case Action::Up: return 'U';
    case Action::Down: return 'D';
    case Action::Left: return 'L';
    case Action::Right: return 'R';
    }
    return '?';
}

std::optional<Action> action_from_char(char c) {
    switch (c) {
    case 'U': return Action::Up;
    case 'D': return Action::Down;
    case 'L': return Action::Left;
    case 'R': return Action::Right;
    default: return std::nullopt;
    }
}

Cell displaced(Cell from, Action a) {
    switch (a) {
    case Action::Up: return {from.row - 1, from.col};
    case Action::Down: return {from.row + 1, from.col};
    case Action::Left: return {from.row, from.col - 1};
    case Action::Right: return {from.row, from.col + 1};
    }
    return from;
}

GridSpec::GridSpec(int width, int height, std::set<Cell> obstacles, Cell start, Cell goal)
    : width_(width), height_(height), obstacles_(std::move(obstacles)), start_(start),
      goal_(goal) {
    if (width_ < 1 || height_ < 1 || width_ * height_ < 2) {
        throw std::invalid_argument("grid dimensions must allow at least two cells");
    }
    if (!in_bounds(start_) || !in_bounds(goal_)) {
        throw std::invalid_argument("start/goal out of bounds");
    }
    if (is_obstacle(start_) || is_obstacle(goal_)) {
        throw std::invalid_argument("start/goal may not be obstacle cells");
    }
    if (start_ == goal_) {
        throw std::invalid_argument("start and goal must differ");
    }
    for (const Cell& c : obstacles_) {
        if (!in_bounds(c)) {
            throw std::invalid_argument("obstacle cell out of bounds");
        }
    }
    if (shortest_path_length(*this, start_, goal_) < 0) {
        throw std::invalid_argument("goal unreachable from start");
    }
}

GridSpec GridSpec::with_task(Cell start, Cell goal) const {
    return GridSpec(width_, height_, obstacles_, start, goal);
}

std::string scenario_kind_name(ScenarioKind k) {
    switch (k) {
    case ScenarioKind::None: return "None";
    case ScenarioKind::Wall: return "Wall";
    case ScenarioKind::ReverseU: return "ReverseU";
    case ScenarioKind::U: return "U";
    case ScenarioKind::Superposition: return "Superposition";
    }
    return "?";
}

std::optional<ScenarioKind> scenario_kind_from_name(const std::string& name) {
    if (name == "None") return ScenarioKind::None;
    if (name == "Wall") return ScenarioKind::Wall;
    if (name == "ReverseU") return ScenarioKind::ReverseU;
    if (name == "U") return ScenarioKind::U;
    if (name == "Superposition") return ScenarioKind::Superposition;
    return std::nullopt;
}

namespace {

std::set<Cell> bar_cells(const ScenarioParams& p) {
    std::set<Cell> cells;
    for (int i = 0; i < p.length; ++i) {
        cells.insert({p.anchor.row, p.anchor.col + i});
    }
    return cells;
}

// `down` selects which way the arms grow from the bar ends.
std::set<Cell> pocket_cells(const ScenarioParams& p, bool down) {
    std::set<Cell> cells = bar_cells(p);
    const int dir = down ? 1 : -1;
    const int left = p.anchor.col;
    const int right = p.anchor.col + p.length - 1;
    for (int i = 1; i <= p.arm_length; ++i) {
        cells.insert({p.anchor.row + dir * i, left});
        cells.insert({p.anchor.row + dir * i, right});
    }
    return cells;
}

} // namespace

ObstacleScenario build_scenario(ScenarioKind kind, const ScenarioParams& params,
                                const GridSpec& grid) {
    ObstacleScenario scenario;
    scenario.kind = kind;
    scenario.params = params;

    if (kind != ScenarioKind::None) {
        if (params.length < 1) {
            throw std::invalid_argument("scenario bar length must be >= 1");
        }
        if ((kind == ScenarioKind::ReverseU || kind == ScenarioKind::U ||
             kind == ScenarioKind::Superposition) &&
            params.arm_length < 1) {
            throw std::invalid_argument("scenario arm length must be >= 1");
        }
    }

    switch (kind) {
    case ScenarioKind::None:
        break;
    case ScenarioKind::Wall:
        scenario.cells = bar_cells(params);
        break;
    case ScenarioKind::ReverseU:
        scenario.cells = pocket_cells(params, /*down=*/true);
        break;
    case ScenarioKind::U:
        scenario.cells = pocket_cells(params, /*down=*/false);
        break;
    case ScenarioKind::Superposition: {
        scenario.cells = bar_cells(params);
        for (const Cell& c : pocket_cells(params, true)) scenario.cells.insert(c);
        for (const Cell& c : pocket_cells(params, false)) scenario.cells.insert(c);
        break;
    }
    }

    for (const Cell& c : scenario.cells) {
        if (!grid.in_bounds(c)) {
            throw std::invalid_argument("scenario geometry out of bounds");
        }
        if (c == grid.start() || c == grid.goal()) {
            throw std::invalid_argument("scenario geometry covers a start or goal cell");
        }
    }

    // Reachability check with the scenario applied on top of existing obstacles.
    std::set<Cell> combined = grid.obstacles();
    combined.insert(scenario.cells.begin(), scenario.cells.end());
    try {
        GridSpec probe(grid.width(), grid.height(), std::move(combined), grid.start(),
                       grid.goal());
        (void)probe;
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("scenario geometry disconnects start from goal");
    }

    return scenario;
}

StepOutcome step(const GridSpec& grid, Cell state, Action action) {
    if (!grid.in_bounds(state)) {
        throw std::invalid_argument("step from out-of-bounds state");
    }
    if (state == grid.goal()) {
        throw std::logic_error("step from the goal state: episode already terminal");
    }
    const Cell target = displaced(state, action);
    StepOutcome out;
    if (grid.is_free(target)) {
        out.next_state = target;
        out.collided = false;
        out.done = (target == grid.goal());
        out.reward = out.done ? 0.0 : -1.0;
    } else {
        out.next_state = state;
        out.collided = true;
        out.done = false;
        out.reward = -1.0;
    }
    return out;
}

int shortest_path_length(const GridSpec& grid, Cell from, Cell to) {
    if (!grid.is_free(from) || !grid.is_free(to)) return -1;
    if (from == to) return 0;
    std::vector<int> dist(static_cast<size_t>(grid.cell_count()), -1);
    std::deque<Cell> queue;
    dist[static_cast<size_t>(grid.cell_index(from))] = 0;
    queue.push_back(from);
    while (!queue.empty()) {
        Cell c = queue.front();
        queue.pop_front();
        const int d = dist[static_cast<size_t>(grid.cell_index(c))];
        for (Action a : kActions) {
            Cell n = displaced(c, a);
            if (!grid.is_free(n)) continue;
            int& dn = dist[static_cast<size_t>(grid.cell_index(n))];
            if (dn >= 0) continue;
            dn = d + 1;
            if (n == to) return dn;
            queue.push_back(n);
        }
    }
    return -1;
}

int optimal_path_length(const GridSpec& grid) {
    return shortest_path_length(grid, grid.start(), grid.goal());
}

} // namespace cktx
