#ifndef CKTX_TEST_ORACLE_EQUIVALENCE_HPP
#define CKTX_TEST_ORACLE_EQUIVALENCE_HPP

// Shared brute-force oracle for the estimator: on a deterministic miniature
// grid, every macro recorded from a context has a constant true residual
// length (its own steps plus the optimal remainder from its endpoint). The
// generator enumerates those macros and replicates each one min_samples
// times; fit() must then select the true minimum for every context.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cktx/causal_estimator.hpp"
#include "cktx/grid_env.hpp"
#include "test_oracles.hpp"

namespace cktx::test {

struct OracleCase {
    std::vector<RAExperience> records;
    // context -> (best macro string, true residual) under shorter-then-lex
    // tie-breaking among true minima.
    std::map<CollisionContext, std::pair<std::string, int>> best;
};

inline std::optional<Cell> run_macro(const GridSpec& grid, Cell from,
                                     const std::vector<Action>& actions) {
    Cell at = from;
    for (Action a : actions) {
        if (at == grid.goal()) return std::nullopt; // macro overruns the goal
        const StepOutcome out = step(grid, at, a);
        if (out.collided) return std::nullopt;
        at = out.next_state;
    }
    return at;
}

inline OracleCase enumerate_oracle_case(const GridSpec& grid, int max_macro_len,
                                        int replicas) {
    OracleCase out;
    int episode = 0;
    for (int r = 0; r < grid.height(); ++r) {
        for (int c = 0; c < grid.width(); ++c) {
            const Cell state{r, c};
            if (!grid.is_free(state) || state == grid.goal()) continue;
            for (Action blocked : kActions) {
                if (!step(grid, state, blocked).collided) continue;
                const CollisionContext context{state, blocked};

                // All collision-free macros up to the length cap, by BFS over
                // prefixes.
                std::vector<std::vector<Action>> frontier{{}};
                for (int len = 1; len <= max_macro_len; ++len) {
                    std::vector<std::vector<Action>> next;
                    for (const auto& prefix : frontier) {
                        for (Action a : kActions) {
                            auto candidate = prefix;
                            candidate.push_back(a);
                            const auto end = run_macro(grid, state, candidate);
                            if (!end) continue;
                            next.push_back(candidate);
                            const int rest =
                                oracle_shortest_path(grid.width(), grid.height(),
                                                     grid.obstacles(), *end, grid.goal());
                            if (rest < 0) continue;
                            const int true_residual = static_cast<int>(candidate.size()) + rest;
                            RecoveryMacro macro{candidate};
                            const std::string arm = macro.to_string();
                            for (int k = 0; k < replicas; ++k) {
                                RAExperience rec;
                                rec.context = context;
                                rec.macro = macro;
                                rec.residual_path_length = true_residual;
                                rec.total_path_length = true_residual + 3;
                                rec.prior_path_length = 3;
                                rec.episode_id = episode++;
                                rec.terminal = RATerminal::ReachedGoal;
                                out.records.push_back(std::move(rec));
                            }
                            auto it = out.best.find(context);
                            const bool better =
                                it == out.best.end() || true_residual < it->second.second ||
                                (true_residual == it->second.second &&
                                 (arm.size() < it->second.first.size() ||
                                  (arm.size() == it->second.first.size() &&
                                   arm < it->second.first)));
                            if (better) {
                                out.best[context] = {arm, true_residual};
                            }
                        }
                    }
                    frontier = std::move(next);
                }
            }
        }
    }
    return out;
}

} // namespace cktx::test

#endif
