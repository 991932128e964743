#include "cktx/recovery_discovery.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "cktx/rng.hpp"

namespace cktx {

std::string RecoveryMacro::to_string() const {
    std::string s;
    s.reserve(actions.size());
    for (Action a : actions) s.push_back(action_to_char(a));
    return s;
}

RecoveryMacro RecoveryMacro::from_string(const std::string& s) {
    RecoveryMacro m;
    m.actions.reserve(s.size());
    for (char c : s) {
        auto a = action_from_char(c);
        if (!a) {
            throw std::invalid_argument("invalid action character in macro string");
        }
        m.actions.push_back(*a);
    }
    return m;
}

std::string terminal_name(RATerminal t) {
    switch (t) {
    case RATerminal::ReachedGoal: return "ReachedGoal";
    case RATerminal::NextCollision: return "NextCollision";
    case RATerminal::Truncated: return "Truncated";
    }
    return "?";
}

namespace {

RATerminal terminal_from_name(const std::string& s) {
    if (s == "ReachedGoal") return RATerminal::ReachedGoal;
    if (s == "NextCollision") return RATerminal::NextCollision;
    if (s == "Truncated") return RATerminal::Truncated;
    throw std::invalid_argument("unknown RA terminal: " + s);
}

struct OpenRecord {
    CollisionContext context;
    std::vector<Action> macro;
    int prior = 0;
    int closed_at = 0; // step index of the event that closed the record
};

} // namespace

std::vector<RAExperience> discover(const GridSpec& grid, const QTable& pretrained,
                                   const DiscoveryConfig& config) {
    if (config.episodes < 1) {
        throw std::invalid_argument("discover: episodes must be >= 1");
    }
    if (pretrained.width() != grid.width() || pretrained.height() != grid.height()) {
        throw std::invalid_argument("discover: pretrained table does not cover this grid");
    }
    if (config.macro_cap < 1) {
        throw std::invalid_argument("discover: macro_cap must be >= 1");
    }
    const int max_steps =
        config.max_steps > 0 ? config.max_steps : 4 * grid.width() * grid.height();

    Rng rng(config.seed);
    std::vector<RAExperience> out;

    for (int episode = 0; episode < config.episodes; ++episode) {
        double explore_eps = 1.0;
        if (config.exploration.kind == ExplorationSpec::Kind::EpsilonGreedyBlend) {
            const double f = config.episodes > 1
                                 ? static_cast<double>(episode) / (config.episodes - 1)
                                 : 0.0;
            explore_eps = config.exploration.epsilon_start +
                          f * (config.exploration.epsilon_end - config.exploration.epsilon_start);
        }

        Cell state = grid.start();
        bool in_ra = false;
        OpenRecord current;
        std::vector<OpenRecord> closed;
        std::vector<int> collision_steps;
        int t = 0;
        bool reached_goal = false;

        while (t < max_steps) {
            Action action;
            if (!in_ra) {
                action = greedy_action(pretrained, state);
            } else if (config.exploration.kind == ExplorationSpec::Kind::UniformRandom ||
                       rng.next_double() < explore_eps) {
                action = static_cast<Action>(rng.next_int(4));
            } else {
                action = greedy_action(pretrained, state);
            }

            const StepOutcome outcome = step(grid, state, action);
            ++t;
            if (outcome.collided) collision_steps.push_back(t);

            if (outcome.collided && !in_ra) {
                current = OpenRecord{{state, action}, {}, t, 0};
                in_ra = true;
            } else if (in_ra && !outcome.collided) {
                current.macro.push_back(action);
                if (static_cast<int>(current.macro.size()) >= config.macro_cap) {
                    // Treatment window over; greedy control resumes. The
                    // residual still runs to the episode end, so the outcome
                    // measures macro-then-greedy, which is exactly how a
                    // transferred macro is deployed.
                    current.closed_at = t;
                    closed.push_back(std::move(current));
                    in_ra = false;
                }
            } else if (in_ra && outcome.collided) {
                current.closed_at = t;
                closed.push_back(std::move(current));
                current = OpenRecord{{state, action}, {}, t, 0};
            }

            state = outcome.next_state;
            if (outcome.done) {
                reached_goal = true;
                break;
            }
        }

        if (in_ra) {
            current.closed_at = t;
            closed.push_back(std::move(current));
        }

        const int total = t;
        for (OpenRecord& rec : closed) {
            if (rec.macro.empty()) continue; // back-to-back collision, nothing recorded
            RAExperience exp;
            exp.context = rec.context;
            exp.macro.actions = std::move(rec.macro);
            exp.prior_path_length = rec.prior;
            exp.total_path_length = total;
            exp.residual_path_length = total - rec.prior;
            exp.episode_id = episode;
            // Terminal: what ended this record's observation window. A later
            // collision marks NextCollision; otherwise the episode either
            // reached the goal or was cut by the step cap.
            const bool collision_followed =
                !collision_steps.empty() && collision_steps.back() >= rec.closed_at;
            if (collision_followed) {
                exp.terminal = RATerminal::NextCollision;
            } else {
                exp.terminal = reached_goal ? RATerminal::ReachedGoal : RATerminal::Truncated;
            }
            out.push_back(std::move(exp));
        }
    }
    return out;
}

std::string experiences_to_csv(const std::vector<RAExperience>& records) {
    std::ostringstream os;
    os << "episode,state_row,state_col,attempted,macro,residual,total,prior,terminal\n";
    for (const auto& r : records) {
        os << r.episode_id << "," << r.context.state.row << "," << r.context.state.col << ","
           << action_to_char(r.context.attempted_direction) << "," << r.macro.to_string() << ","
           << r.residual_path_length << "," << r.total_path_length << ","
           << r.prior_path_length << "," << terminal_name(r.terminal) << "\n";
    }
    return os.str();
}

std::vector<RAExperience> experiences_from_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line) ||
        line != "episode,state_row,state_col,attempted,macro,residual,total,prior,terminal") {
        throw std::invalid_argument("unrecognized experience CSV header");
    }
    std::vector<RAExperience> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        auto next = [&]() {
            if (!std::getline(ls, field, ',')) {
                throw std::invalid_argument("truncated experience CSV row");
            }
            return field;
        };
        RAExperience r;
        r.episode_id = std::stoi(next());
        r.context.state.row = std::stoi(next());
        r.context.state.col = std::stoi(next());
        const std::string dir = next();
        auto a = dir.size() == 1 ? action_from_char(dir[0]) : std::nullopt;
        if (!a) throw std::invalid_argument("bad attempted direction: " + dir);
        r.context.attempted_direction = *a;
        r.macro = RecoveryMacro::from_string(next());
        if (r.macro.actions.empty()) {
            throw std::invalid_argument("experience row with empty macro");
        }
        r.residual_path_length = std::stoi(next());
        r.total_path_length = std::stoi(next());
        r.prior_path_length = std::stoi(next());
        r.terminal = terminal_from_name(next());
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace cktx
