#ifndef CKTX_RECOVERY_DISCOVERY_HPP
#define CKTX_RECOVERY_DISCOVERY_HPP

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "cktx/tabular_rl.hpp"

namespace cktx {

// The key of the lookup model: the cell occupied when a collision happened
// and the movement direction that was attempted.
struct CollisionContext {
    Cell state;
    Action attempted_direction = Action::Up;

    auto operator<=>(const CollisionContext&) const = default;
};

// A fixed, non-empty sequence of primitive actions executed to work around an
// obstacle after a collision.
struct RecoveryMacro {
    std::vector<Action> actions;

    bool operator==(const RecoveryMacro&) const = default;
    int length() const { return static_cast<int>(actions.size()); }
    std::string to_string() const; // compact direction string, e.g. "UULDR"
    static RecoveryMacro from_string(const std::string& s);
};

enum class RATerminal { ReachedGoal, NextCollision, Truncated };

std::string terminal_name(RATerminal t);

// One recorded recovery experience: the unit of causal data. prior counts the
// steps up to and including the colliding attempt that opened the record;
// residual counts the steps from the first post-collision action to the
// episode end, so prior + residual = total for the first record of an episode.
struct RAExperience {
    CollisionContext context;
    RecoveryMacro macro;
    int residual_path_length = 0;
    int total_path_length = 0;
    int prior_path_length = 0;
    int episode_id = 0;
    RATerminal terminal = RATerminal::NextCollision;
};

struct ExplorationSpec {
    enum class Kind { UniformRandom, EpsilonGreedyBlend };
    Kind kind = Kind::UniformRandom;
    // Blend: acts randomly with probability epsilon, greedily otherwise;
    // epsilon interpolates linearly from start to end over the episodes.
    double epsilon_start = 1.0;
    double epsilon_end = 0.5;
};

struct DiscoveryConfig {
    int episodes = 500;
    std::uint64_t seed = 0;
    ExplorationSpec exploration;
    int max_steps = 0;  // 0 means 4 * width * height
    int macro_cap = 100;
};

// Recovery-action discovery: runs the pre-trained greedy policy until a
// collision, then explores, logging the action sequence of every
// inter-collision segment together with its context and outcome. The Q-table
// is frozen throughout. Back-to-back collisions would close a zero-length
// macro; such records are dropped (the second collision still opens the next
// record). A record whose macro reaches macro_cap closes as Truncated and
// control returns to the greedy policy.
std::vector<RAExperience> discover(const GridSpec& grid, const QTable& pretrained,
                                   const DiscoveryConfig& config);

// CSV round-trip for offline fitting and audit.
std::string experiences_to_csv(const std::vector<RAExperience>& records);
std::vector<RAExperience> experiences_from_csv(const std::string& csv);

} // namespace cktx

#endif
