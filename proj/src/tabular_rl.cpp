#include "cktx/tabular_rl.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "cktx/rng.hpp"

namespace cktx {

QTable::QTable(int width, int height)
    : width_(width), height_(height),
      values_(static_cast<size_t>(width) * static_cast<size_t>(height) * 4, 0.0) {
    if (width < 1 || height < 1) {
        throw std::invalid_argument("QTable dimensions must be positive");
    }
}

std::string QTable::serialize() const {
    std::ostringstream os;
    save(os);
    return os.str();
}

void QTable::save(std::ostream& os) const {
    os << "cktx-qtable v1\n" << width_ << " " << height_ << "\n";
    char buf[512];
    for (int r = 0; r < height_; ++r) {
        for (int c = 0; c < width_; ++c) {
            const auto v = action_values({r, c});
            // %.17g round-trips doubles exactly, so cached tables reload
            // bit-identical.
            std::snprintf(buf, sizeof(buf), "%d %d %.17g %.17g %.17g %.17g\n", r, c, v[0], v[1],
                          v[2], v[3]);
            os << buf;
        }
    }
}

QTable QTable::deserialize(const std::string& text) {
    std::istringstream is(text);
    return load(is);
}

QTable QTable::load(std::istream& is) {
    std::string header;
    std::getline(is, header);
    if (header != "cktx-qtable v1") {
        throw std::runtime_error("unrecognized qtable format: " + header);
    }
    int width = 0;
    int height = 0;
    if (!(is >> width >> height)) {
        throw std::runtime_error("qtable header truncated");
    }
    QTable table(width, height);
    int r = 0;
    int c = 0;
    double q[4];
    for (int i = 0; i < width * height; ++i) {
        if (!(is >> r >> c >> q[0] >> q[1] >> q[2] >> q[3])) {
            throw std::runtime_error("qtable body truncated");
        }
        for (int a = 0; a < 4; ++a) {
            table.set_value({r, c}, static_cast<Action>(a), q[a]);
        }
    }
    return table;
}

void LearningConfig::validate() const {
    if (learning_rate <= 0.0 || learning_rate > 1.0) {
        throw std::invalid_argument("learning_rate must be in (0,1]");
    }
    if (discount < 0.0 || discount > 1.0) {
        throw std::invalid_argument("discount must be in [0,1]");
    }
    if (epsilon < 0.0 || epsilon > 1.0) {
        throw std::invalid_argument("epsilon must be in [0,1]");
    }
    if (epsilon_decay <= 0.0 || epsilon_decay > 1.0) {
        throw std::invalid_argument("epsilon_decay must be in (0,1]");
    }
    if (epsilon_min < 0.0 || epsilon_min > 1.0) {
        throw std::invalid_argument("epsilon_min must be in [0,1]");
    }
    if (episodes < 0) {
        throw std::invalid_argument("episodes must be >= 0");
    }
    if (max_steps < 1) {
        throw std::invalid_argument("max_steps must be >= 1");
    }
}

double EpisodeTrace::total_reward() const {
    double r = 0.0;
    for (const auto& s : steps) r += s.reward;
    return r;
}

int EpisodeTrace::collision_count() const {
    int k = 0;
    for (const auto& s : steps) k += s.collided ? 1 : 0;
    return k;
}

Action greedy_action(const QTable& table, Cell state) {
    const auto values = table.action_values(state);
    int best = 0;
    for (int a = 1; a < 4; ++a) {
        if (values[static_cast<size_t>(a)] > values[static_cast<size_t>(best)]) best = a;
    }
    return static_cast<Action>(best);
}

QTable train(const GridSpec& grid, const LearningConfig& config) {
    config.validate();
    QTable table(grid.width(), grid.height());
    Rng rng(config.seed);
    double epsilon = config.epsilon;

    // Exploring starts: macro execution can drop an agent far from the
    // start-goal corridor, so the table has to be trained at every free
    // state, not just along the on-policy path.
    auto draw_start = [&]() {
        while (true) {
            const Cell c{rng.next_int(grid.height()), rng.next_int(grid.width())};
            if (grid.is_free(c) && c != grid.goal()) return c;
        }
    };

    for (int episode = 0; episode < config.episodes; ++episode) {
        Cell state = draw_start();
        for (int t = 0; t < config.max_steps; ++t) {
            Action action;
            if (rng.next_double() < epsilon) {
                action = static_cast<Action>(rng.next_int(4));
            } else {
                action = greedy_action(table, state);
            }
            const StepOutcome out = step(grid, state, action);
            double max_next = 0.0;
            if (!out.done) {
                const auto next_values = table.action_values(out.next_state);
                max_next = *std::max_element(next_values.begin(), next_values.end());
            }
            const double old = table.value(state, action);
            table.set_value(state, action,
                            old + config.learning_rate *
                                      (out.reward + config.discount * max_next - old));
            state = out.next_state;
            if (out.done) break;
        }
        epsilon = std::max(config.epsilon_min, epsilon * config.epsilon_decay);
    }
    return table;
}

EpisodeTrace run_policy(const GridSpec& grid, const Policy& policy, int max_steps) {
    if (max_steps < 1) {
        throw std::invalid_argument("max_steps must be >= 1");
    }
    EpisodeTrace trace;
    Cell state = grid.start();
    Rng rng(std::holds_alternative<RandomPolicy>(policy) ? std::get<RandomPolicy>(policy).seed
                                                         : 0);
    for (int t = 0; t < max_steps; ++t) {
        Action action;
        if (const auto* greedy = std::get_if<GreedyPolicy>(&policy)) {
            action = greedy_action(*greedy->table, state);
        } else {
            action = static_cast<Action>(rng.next_int(4));
        }
        const StepOutcome out = step(grid, state, action);
        trace.steps.push_back({state, action, out.reward, out.collided, out.next_state});
        state = out.next_state;
        if (out.done) {
            trace.reached_goal = true;
            break;
        }
    }
    return trace;
}

} // namespace cktx
