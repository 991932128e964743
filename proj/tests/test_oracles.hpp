#ifndef CKTX_TEST_ORACLES_HPP
#define CKTX_TEST_ORACLES_HPP

// Test-only oracles, deliberately independent of the implementations they
// check. The shortest-path oracle is a plain layer-by-layer frontier
// expansion; the library uses an indexed queue.

#include <set>
#include <vector>

#include "cktx/grid_env.hpp"

namespace cktx::test {

// Returns -1 when `to` is unreachable from `from`.
inline int oracle_shortest_path(int width, int height, const std::set<Cell>& obstacles,
                                Cell from, Cell to) {
    auto blocked = [&](Cell c) {
        return c.row < 0 || c.row >= height || c.col < 0 || c.col >= width ||
               obstacles.count(c) > 0;
    };
    if (blocked(from) || blocked(to)) return -1;
    if (from == to) return 0;
    std::vector<std::vector<bool>> seen(static_cast<size_t>(height),
                                        std::vector<bool>(static_cast<size_t>(width), false));
    seen[static_cast<size_t>(from.row)][static_cast<size_t>(from.col)] = true;
    std::vector<Cell> frontier{from};
    int distance = 0;
    while (!frontier.empty()) {
        ++distance;
        std::vector<Cell> next;
        for (const Cell& c : frontier) {
            const Cell neighbors[4] = {{c.row - 1, c.col},
                                       {c.row + 1, c.col},
                                       {c.row, c.col - 1},
                                       {c.row, c.col + 1}};
            for (const Cell& n : neighbors) {
                if (blocked(n) || seen[static_cast<size_t>(n.row)][static_cast<size_t>(n.col)]) {
                    continue;
                }
                if (n == to) return distance;
                seen[static_cast<size_t>(n.row)][static_cast<size_t>(n.col)] = true;
                next.push_back(n);
            }
        }
        frontier = std::move(next);
    }
    return -1;
}

// 5x5 miniature used across discovery/estimator/transfer tests: start (0,2),
// goal (3,2), a single wall cell at (2,2) directly on the unique greedy path.
inline GridSpec miniature_wall() {
    return GridSpec(5, 5, {Cell{2, 2}}, Cell{0, 2}, Cell{3, 2});
}

// 5x5 miniature family mirroring the full-size barrier shapes: bar on row 2
// spanning columns 1..3, arms one cell long.
inline std::set<Cell> miniature_cells(ScenarioKind kind) {
    const std::set<Cell> bar{{2, 1}, {2, 2}, {2, 3}};
    std::set<Cell> cells = bar;
    if (kind == ScenarioKind::ReverseU || kind == ScenarioKind::Superposition) {
        cells.insert({3, 1});
        cells.insert({3, 3});
    }
    if (kind == ScenarioKind::U || kind == ScenarioKind::Superposition) {
        cells.insert({1, 1});
        cells.insert({1, 3});
    }
    if (kind == ScenarioKind::None) return {};
    if (kind == ScenarioKind::Wall) return bar;
    return cells;
}

} // namespace cktx::test

#endif
