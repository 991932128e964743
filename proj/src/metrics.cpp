#include "cktx/metrics.hpp"

#include <stdexcept>

namespace cktx {

DecomposedEpisode decompose(const EpisodeTrace& trace) {
    if (trace.steps.empty()) {
        throw std::invalid_argument("decompose: empty trace");
    }
    DecomposedEpisode d;
    size_t i = 0;
    for (; i < trace.steps.size() && !trace.steps[i].collided; ++i) {
        d.pre_collision_reward += trace.steps[i].reward;
        ++d.pre_collision_length;
    }
    while (i < trace.steps.size()) {
        // steps[i] is a collision; the segment spans up to the next one.
        double tau = 0.0;
        int len = 0;
        tau += trace.steps[i].reward;
        ++len;
        ++i;
        for (; i < trace.steps.size() && !trace.steps[i].collided; ++i) {
            tau += trace.steps[i].reward;
            ++len;
        }
        d.post_collision_rewards.push_back(tau);
        d.post_collision_lengths.push_back(len);
    }
    d.total_reward = d.pre_collision_reward;
    for (double tau : d.post_collision_rewards) d.total_reward += tau;
    return d;
}

OfprValue ofpr(int l_opt, int l_agent, bool failed) {
    if (l_opt < 1) {
        throw std::invalid_argument("ofpr: l_opt must be >= 1");
    }
    if (l_agent < l_opt) {
        throw std::logic_error("ofpr: l_agent < l_opt indicates a broken oracle");
    }
    return {static_cast<double>(l_opt) / static_cast<double>(l_agent), l_opt, l_agent, failed};
}

double delta_ck(double t_ck, double l_ck) {
    return t_ck - l_ck;
}

double gap_closure(double ofpr_rand, double ofpr_ck, double ofpr_pstar) {
    if (ofpr_pstar <= ofpr_rand) {
        throw std::invalid_argument("gap_closure: degenerate denominator (pstar <= rand)");
    }
    return (ofpr_ck - ofpr_rand) / (ofpr_pstar - ofpr_rand);
}

} // namespace cktx
