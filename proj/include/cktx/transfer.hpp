#ifndef CKTX_TRANSFER_HPP
#define CKTX_TRANSFER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cktx/causal_estimator.hpp"
#include "cktx/metrics.hpp"
#include "cktx/tabular_rl.hpp"

namespace cktx {

struct TransferSeeds {
    std::uint64_t rollout = 0;
    std::uint64_t fallback = 0;
};

enum class MacroSource { Teacher, Fallback };

struct MacroInvocation {
    CollisionContext context;
    MacroSource source = MacroSource::Teacher;
    std::vector<Action> executed;
    bool completed = false;
};

struct TransferTrace {
    EpisodeTrace trace;
    std::vector<MacroInvocation> macro_invocations;
    int model_queries = 0;
    int model_misses = 0;
};

// One learner episode under zero-shot causal knowledge: greedy control from
// the learner's obstacle-free Q-table; on collision the lookup model is
// queried with the collision context and a hit runs as an atomic macro block
// before greedy control resumes. On a miss the agent explores uniformly at
// random until one collision-free step. Neither the Q-table nor the model is
// ever updated. A context already served by a teacher macro in this episode
// goes straight to fallback, which rules out macro livelock.
TransferTrace run_episode_with_ck(const GridSpec& grid, const QTable& qtable,
                                  const LookupModel& model, const TransferSeeds& seeds,
                                  int max_steps);

struct TransferAssignment {
    const LookupModel* teacher_model = nullptr;
    const QTable* learner_qtable = nullptr;
    GridSpec grid; // the learner's task: barrier obstacles plus its start/goal
    std::string scenario_id;
    TransferSeeds seeds;
    int max_steps = 0; // 0 means 4 * width * height

    void validate() const;
};

struct InvocationStats {
    int model_queries = 0;
    int model_misses = 0;
    int teacher_invocations = 0;
    int teacher_completed = 0;
    int fallback_invocations = 0;
};

struct TransferEvaluation {
    double mean_ofpr = 0.0; // T_CK when evaluating a teacher model
    double std_ofpr = 0.0;
    std::vector<OfprValue> per_episode;
    InvocationStats stats;
    int failures = 0; // episodes truncated before the goal
};

// Runs run_episode_with_ck over `episodes` seeded episodes and aggregates
// OFPR against the learner's own optimal path length. Per-episode seeds are
// derived from the assignment seeds and the episode index only, so two
// evaluations that differ solely in the model are exactly paired.
TransferEvaluation evaluate_transfer(const TransferAssignment& assignment, int episodes);

} // namespace cktx

#endif
