#include <doctest.h>

#include <stdexcept>

#include "cktx/grid_env.hpp"
#include "cktx/rng.hpp"
#include "test_oracles.hpp"

using namespace cktx;

namespace {

GridSpec empty11(Cell start = {0, 0}, Cell goal = {10, 10}) {
    return GridSpec(11, 11, {}, start, goal);
}

} // namespace

TEST_CASE("grid spec validates its invariants") {
    CHECK_THROWS_AS(GridSpec(11, 11, {}, {0, 0}, {0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec(11, 11, {}, {0, 0}, {11, 10}), std::invalid_argument);
    CHECK_THROWS_AS(GridSpec(11, 11, {Cell{0, 0}}, {0, 0}, {10, 10}), std::invalid_argument);
    // A full-width bar disconnects start from goal.
    std::set<Cell> bar;
    for (int c = 0; c < 11; ++c) bar.insert({5, c});
    CHECK_THROWS_AS(GridSpec(11, 11, bar, {0, 0}, {10, 10}), std::invalid_argument);
}

TEST_CASE("wall scenario enumerates the expected bar cells") {
    const GridSpec grid = empty11();
    const ObstacleScenario wall = build_scenario(ScenarioKind::Wall, {{5, 3}, 5, 0}, grid);
    const std::set<Cell> expected{{5, 3}, {5, 4}, {5, 5}, {5, 6}, {5, 7}};
    CHECK(wall.cells == expected);
    // The default start/goal pairs stay connected with the bar applied.
    for (const auto& [start, goal] :
         {std::pair<Cell, Cell>{{0, 0}, {10, 10}}, {{0, 0}, {10, 0}}, {{0, 10}, {10, 10}}}) {
        CHECK(test::oracle_shortest_path(11, 11, wall.cells, start, goal) > 0);
    }
}

TEST_CASE("no-obstacle scenario is empty") {
    const ObstacleScenario none = build_scenario(ScenarioKind::None, {}, empty11());
    CHECK(none.cells.empty());
}

TEST_CASE("superposition is the union of the other three geometries") {
    const GridSpec grid = empty11({1, 1}, {9, 9});
    const ScenarioParams params{{5, 1}, 9, 2};
    const auto wall = build_scenario(ScenarioKind::Wall, params, grid);
    const auto reverse_u = build_scenario(ScenarioKind::ReverseU, params, grid);
    const auto u = build_scenario(ScenarioKind::U, params, grid);
    const auto superposition = build_scenario(ScenarioKind::Superposition, params, grid);
    std::set<Cell> expected = wall.cells;
    expected.insert(reverse_u.cells.begin(), reverse_u.cells.end());
    expected.insert(u.cells.begin(), u.cells.end());
    CHECK(superposition.cells == expected);
}

TEST_CASE("pocket arms grow toward the expected side") {
    const GridSpec grid = empty11({1, 1}, {9, 9});
    const ScenarioParams params{{5, 2}, 3, 2};
    const auto reverse_u = build_scenario(ScenarioKind::ReverseU, params, grid);
    CHECK(reverse_u.cells.count({6, 2}) == 1); // arm below the bar
    CHECK(reverse_u.cells.count({4, 2}) == 0);
    const auto u = build_scenario(ScenarioKind::U, params, grid);
    CHECK(u.cells.count({4, 2}) == 1); // arm above the bar
    CHECK(u.cells.count({6, 2}) == 0);
}

TEST_CASE("scenario geometry errors are rejected") {
    const GridSpec grid = empty11();
    CHECK_THROWS_AS(build_scenario(ScenarioKind::Wall, {{5, 8}, 5, 0}, grid),
                    std::invalid_argument); // runs off the right edge
    CHECK_THROWS_AS(build_scenario(ScenarioKind::Wall, {{0, 0}, 3, 0}, grid),
                    std::invalid_argument); // covers the start
    CHECK_THROWS_AS(build_scenario(ScenarioKind::Wall, {{5, 0}, 11, 0}, grid),
                    std::invalid_argument); // disconnects start from goal
}

TEST_CASE("step applies the documented collision and reward semantics") {
    const GridSpec grid = empty11();

    SUBCASE("off-grid move collides in place") {
        const StepOutcome out = step(grid, {0, 0}, Action::Up);
        CHECK(out.next_state == Cell{0, 0});
        CHECK(out.collided);
        CHECK(out.reward == -1.0);
        CHECK_FALSE(out.done);
    }
    SUBCASE("goal-reaching step is free and terminal") {
        const StepOutcome out = step(grid, {9, 10}, Action::Down);
        CHECK(out.next_state == grid.goal());
        CHECK(out.reward == 0.0);
        CHECK(out.done);
    }
    SUBCASE("moving into a wall cell collides") {
        const auto wall = build_scenario(ScenarioKind::Wall, {{5, 3}, 5, 0}, grid);
        const GridSpec blocked(11, 11, wall.cells, {0, 0}, {10, 10});
        for (const Cell& c : wall.cells) {
            const StepOutcome out = step(blocked, {c.row - 1, c.col}, Action::Down);
            CHECK(out.collided);
            CHECK(out.reward == -1.0);
            CHECK(out.next_state == Cell{c.row - 1, c.col});
        }
    }
    SUBCASE("ordinary move costs one") {
        const StepOutcome out = step(grid, {4, 4}, Action::Right);
        CHECK(out.next_state == Cell{4, 5});
        CHECK(out.reward == -1.0);
        CHECK_FALSE(out.collided);
        CHECK_FALSE(out.done);
    }
    SUBCASE("stepping from the goal is an error") {
        CHECK_THROWS_AS(step(grid, grid.goal(), Action::Up), std::logic_error);
    }
}

TEST_CASE("optimal path length equals Manhattan distance on the empty grid") {
    // Exhaustive over all start/goal pairs of the 11x11 grid.
    for (int r1 = 0; r1 < 11; ++r1) {
        for (int c1 = 0; c1 < 11; ++c1) {
            for (int r2 = 0; r2 < 11; ++r2) {
                for (int c2 = 0; c2 < 11; ++c2) {
                    if (r1 == r2 && c1 == c2) continue;
                    const GridSpec grid(11, 11, {}, {r1, c1}, {r2, c2});
                    const int manhattan = std::abs(r1 - r2) + std::abs(c1 - c2);
                    REQUIRE(optimal_path_length(grid) == manhattan);
                }
            }
        }
    }
}

TEST_CASE("optimal path length on barrier grids matches the independent oracle") {
    const GridSpec base = empty11({1, 1}, {9, 9});
    const ScenarioParams params{{5, 1}, 9, 2};
    for (ScenarioKind kind : {ScenarioKind::Wall, ScenarioKind::ReverseU, ScenarioKind::U,
                              ScenarioKind::Superposition}) {
        const auto scenario = build_scenario(kind, params, base);
        const GridSpec grid(11, 11, scenario.cells, {1, 1}, {9, 9});
        CHECK(optimal_path_length(grid) ==
              test::oracle_shortest_path(11, 11, scenario.cells, {1, 1}, {9, 9}));
    }
    CHECK(optimal_path_length(GridSpec(11, 11, {}, {0, 0}, {0, 1})) == 1);
}

TEST_CASE("adding obstacles never shortens the optimal path") {
    Rng rng(321);
    for (int trial = 0; trial < 60; ++trial) {
        std::set<Cell> obstacles;
        int previous = optimal_path_length(empty11());
        for (int inserted = 0; inserted < 25; ++inserted) {
            const Cell candidate{rng.next_int(11), rng.next_int(11)};
            if (candidate == Cell{0, 0} || candidate == Cell{10, 10}) continue;
            auto extended = obstacles;
            extended.insert(candidate);
            if (test::oracle_shortest_path(11, 11, extended, {0, 0}, {10, 10}) < 0) continue;
            obstacles = std::move(extended);
            const int now = optimal_path_length(GridSpec(11, 11, obstacles, {0, 0}, {10, 10}));
            CHECK(now >= previous);
            previous = now;
        }
    }
}

TEST_CASE("step is deterministic") {
    const GridSpec grid = empty11();
    for (int r = 0; r < 11; ++r) {
        for (int c = 0; c < 11; ++c) {
            if (Cell{r, c} == grid.goal()) continue;
            for (Action a : kActions) {
                const StepOutcome first = step(grid, {r, c}, a);
                const StepOutcome second = step(grid, {r, c}, a);
                CHECK(first.next_state == second.next_state);
                CHECK(first.reward == second.reward);
                CHECK(first.collided == second.collided);
                CHECK(first.done == second.done);
            }
        }
    }
}
