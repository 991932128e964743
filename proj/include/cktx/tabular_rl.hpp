#ifndef CKTX_TABULAR_RL_HPP
#define CKTX_TABULAR_RL_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "cktx/grid_env.hpp"

namespace cktx {

// Dense tabular state-action value function; one entry per (cell, action),
// zero-initialized.
class QTable {
public:
    QTable() : QTable(1, 1) {}
    QTable(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }

    double value(Cell c, Action a) const { return values_[index(c, a)]; }
    void set_value(Cell c, Action a, double v) { values_[index(c, a)] = v; }

    std::array<double, 4> action_values(Cell c) const {
        const size_t base = index(c, Action::Up);
        return {values_[base], values_[base + 1], values_[base + 2], values_[base + 3]};
    }

    bool operator==(const QTable&) const = default;

    // Versioned flat text format: one line per state, coordinates plus the
    // four action values at full precision (round-trip exact).
    std::string serialize() const;
    static QTable deserialize(const std::string& text);
    void save(std::ostream& os) const;
    static QTable load(std::istream& is);

private:
    size_t index(Cell c, Action a) const {
        return static_cast<size_t>((c.row * width_ + c.col) * 4 + static_cast<int>(a));
    }

    int width_;
    int height_;
    std::vector<double> values_;
};

struct LearningConfig {
    double learning_rate = 0.1;
    double discount = 0.99;
    double epsilon = 1.0;
    double epsilon_decay = 0.995;
    double epsilon_min = 0.05;
    int episodes = 5000;
    int max_steps = 484;
    std::uint64_t seed = 0;

    void validate() const;
};

struct StepRecord {
    Cell state;
    Action action = Action::Up;
    double reward = 0.0;
    bool collided = false;
    Cell next_state;
};

struct EpisodeTrace {
    std::vector<StepRecord> steps;
    bool reached_goal = false;

    double total_reward() const;
    int path_length() const { return static_cast<int>(steps.size()); }
    int collision_count() const;
};

// One-step Q-learning with epsilon-greedy behavior; bit-deterministic in
// (grid, config).
QTable train(const GridSpec& grid, const LearningConfig& config);

// Argmax over the four action values; ties break in fixed order
// Up, Down, Left, Right.
Action greedy_action(const QTable& table, Cell state);

struct GreedyPolicy {
    const QTable* table = nullptr;
};
struct RandomPolicy {
    std::uint64_t seed = 0;
};
using Policy = std::variant<GreedyPolicy, RandomPolicy>;

// Executes the policy from the grid's start until goal or max_steps,
// recording every step. Truncation shows up as reached_goal = false.
EpisodeTrace run_policy(const GridSpec& grid, const Policy& policy, int max_steps);

} // namespace cktx

#endif
