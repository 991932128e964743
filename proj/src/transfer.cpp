#include "cktx/transfer.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "cktx/rng.hpp"

namespace cktx {

void TransferAssignment::validate() const {
    if (teacher_model == nullptr || learner_qtable == nullptr) {
        throw std::invalid_argument("transfer assignment missing model or qtable");
    }
    if (!teacher_model->provenance.scenario_id.empty() &&
        teacher_model->provenance.scenario_id != scenario_id) {
        throw std::invalid_argument("teacher model was fitted for scenario '" +
                                    teacher_model->provenance.scenario_id +
                                    "', assignment expects '" + scenario_id + "'");
    }
    if (learner_qtable->width() != grid.width() || learner_qtable->height() != grid.height()) {
        throw std::invalid_argument("learner qtable does not cover the assignment grid");
    }
}

TransferTrace run_episode_with_ck(const GridSpec& grid, const QTable& qtable,
                                  const LookupModel& model, const TransferSeeds& seeds,
                                  int max_steps) {
    if (max_steps < 1) {
        throw std::invalid_argument("max_steps must be >= 1");
    }

    TransferTrace result;
    Rng fallback_rng(seeds.fallback);
    Cell state = grid.start();

    enum class Mode { Greedy, Macro, Fallback };
    Mode mode = Mode::Greedy;
    std::vector<Action> active_macro;
    size_t macro_pos = 0;
    std::set<CollisionContext> served_contexts;

    // Dispatch for a collision encountered under greedy or macro control.
    auto on_collision = [&](const CollisionContext& context) {
        if (served_contexts.count(context) > 0) {
            result.macro_invocations.push_back({context, MacroSource::Fallback, {}, false});
            mode = Mode::Fallback;
            return;
        }
        ++result.model_queries;
        const auto macro = query(model, context);
        if (macro) {
            served_contexts.insert(context);
            result.macro_invocations.push_back({context, MacroSource::Teacher, {}, false});
            active_macro = macro->actions;
            macro_pos = 0;
            mode = Mode::Macro;
        } else {
            ++result.model_misses;
            result.macro_invocations.push_back({context, MacroSource::Fallback, {}, false});
            mode = Mode::Fallback;
        }
    };

    for (int t = 0; t < max_steps; ++t) {
        Action action = Action::Up;
        switch (mode) {
        case Mode::Greedy: action = greedy_action(qtable, state); break;
        case Mode::Macro: action = active_macro[macro_pos]; break;
        case Mode::Fallback: action = static_cast<Action>(fallback_rng.next_int(4)); break;
        }

        const StepOutcome out = step(grid, state, action);
        result.trace.steps.push_back({state, action, out.reward, out.collided, out.next_state});

        switch (mode) {
        case Mode::Greedy:
            if (out.collided) {
                on_collision({state, action});
            }
            break;
        case Mode::Macro: {
            auto& invocation = result.macro_invocations.back();
            invocation.executed.push_back(action);
            ++macro_pos;
            if (out.collided) {
                // Abort the block; the interrupting collision is a fresh context.
                invocation.completed = false;
                on_collision({state, action});
            } else if (macro_pos == active_macro.size()) {
                invocation.completed = true;
                mode = Mode::Greedy;
            } else if (out.done) {
                invocation.completed = false; // goal cut the block short
            }
            break;
        }
        case Mode::Fallback: {
            auto& invocation = result.macro_invocations.back();
            invocation.executed.push_back(action);
            if (!out.collided) {
                invocation.completed = true;
                mode = Mode::Greedy;
            }
            break;
        }
        }

        state = out.next_state;
        if (out.done) {
            result.trace.reached_goal = true;
            break;
        }
    }
    return result;
}

TransferEvaluation evaluate_transfer(const TransferAssignment& assignment, int episodes) {
    if (episodes < 1) {
        throw std::invalid_argument("evaluate_transfer: episodes must be >= 1");
    }
    assignment.validate();
    const int max_steps = assignment.max_steps > 0
                              ? assignment.max_steps
                              : 4 * assignment.grid.width() * assignment.grid.height();
    const int l_opt = optimal_path_length(assignment.grid);

    TransferEvaluation eval;
    eval.per_episode.reserve(static_cast<size_t>(episodes));
    double sum = 0.0;
    for (int e = 0; e < episodes; ++e) {
        TransferSeeds ep_seeds;
        ep_seeds.rollout = derive_seed(assignment.seeds.rollout, static_cast<std::uint64_t>(e));
        ep_seeds.fallback = derive_seed(
            derive_seed(assignment.seeds.fallback, static_cast<std::uint64_t>(e)),
            ep_seeds.rollout);
        const TransferTrace t = run_episode_with_ck(assignment.grid, *assignment.learner_qtable,
                                                    *assignment.teacher_model, ep_seeds,
                                                    max_steps);
        const bool failed = !t.trace.reached_goal;
        eval.per_episode.push_back(ofpr(l_opt, t.trace.path_length(), failed));
        sum += eval.per_episode.back().value;
        eval.failures += failed ? 1 : 0;
        eval.stats.model_queries += t.model_queries;
        eval.stats.model_misses += t.model_misses;
        for (const auto& inv : t.macro_invocations) {
            if (inv.source == MacroSource::Teacher) {
                ++eval.stats.teacher_invocations;
                eval.stats.teacher_completed += inv.completed ? 1 : 0;
            } else {
                ++eval.stats.fallback_invocations;
            }
        }
    }
    eval.mean_ofpr = sum / static_cast<double>(episodes);
    double ss = 0.0;
    for (const auto& v : eval.per_episode) {
        ss += (v.value - eval.mean_ofpr) * (v.value - eval.mean_ofpr);
    }
    eval.std_ofpr = episodes > 1 ? std::sqrt(ss / static_cast<double>(episodes - 1)) : 0.0;
    return eval;
}

} // namespace cktx
