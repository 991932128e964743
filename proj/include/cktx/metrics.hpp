#ifndef CKTX_METRICS_HPP
#define CKTX_METRICS_HPP

#include <vector>

#include "cktx/tabular_rl.hpp"

namespace cktx {

// Reward/path decomposition of one episode around its collision events.
struct DecomposedEpisode {
    double pre_collision_reward = 0.0;          // rho
    std::vector<double> post_collision_rewards; // tau_1 .. tau_k
    double total_reward = 0.0;                  // R = rho + sum(tau_i), exact
    int pre_collision_length = 0;
    std::vector<int> post_collision_lengths;
};

// rho sums the rewards strictly before the first collision; each tau_i sums
// the rewards from the i-th collision up to (excluding) the next collision or
// the episode end.
DecomposedEpisode decompose(const EpisodeTrace& trace);

struct OfprValue {
    double value = 0.0;
    int l_opt = 0;
    int l_agent = 0;
    bool failed = false; // goal not reached; value computed against the cap
};

// Optimal-to-final path-length ratio l_opt / l_agent. l_agent < l_opt means a
// broken oracle and is a hard error, never clamped.
OfprValue ofpr(int l_opt, int l_agent, bool failed = false);

// Net teacher value: positive means transfer benefit, negative detrimental.
double delta_ck(double t_ck, double l_ck);

// Fraction of the Rand-to-P* gap closed by the causal-model agent.
double gap_closure(double ofpr_rand, double ofpr_ck, double ofpr_pstar);

} // namespace cktx

#endif
