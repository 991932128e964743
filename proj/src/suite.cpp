#include "cktx/suite.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "cktx/metrics.hpp"
#include "cktx/rng.hpp"
#include "cktx/svg_plots.hpp"
#include "cktx/transfer.hpp"

namespace cktx {

using nlohmann::json;

std::string TaskSpec::id() const {
    std::ostringstream os;
    os << start.row << "," << start.col << "->" << goal.row << "," << goal.col;
    return os.str();
}

namespace {

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == ',') out.push_back('-');
        else if (c == '>') continue;
        else out.push_back(c);
    }
    return out;
}

void check_id(const std::string& id, const char* what) {
    if (id.empty()) {
        throw std::invalid_argument(std::string(what) + " id must not be empty");
    }
    if (id.find(',') != std::string::npos || id.find('\n') != std::string::npos) {
        throw std::invalid_argument(std::string(what) + " id must not contain commas/newlines");
    }
}

json cell_to_json(Cell c) { return json::array({c.row, c.col}); }

Cell cell_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) {
        throw std::invalid_argument("cell must be a [row, col] array");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

void run_parallel(int n, int jobs, const std::function<void(int)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int workers = std::min(jobs, n);
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd m;
    if (values.empty()) return m;
    for (double v : values) m.mean += v;
    m.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - m.mean) * (v - m.mean);
        m.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return m;
}

} // namespace

void SuiteConfig::validate() const {
    if (width < 2 || height < 2) {
        throw std::invalid_argument("grid must be at least 2x2");
    }
    if (goal_scenarios.empty()) {
        throw std::invalid_argument("at least one goal scenario required");
    }
    if (barriers.empty()) {
        throw std::invalid_argument("at least one barrier required");
    }
    std::set<std::string> scenario_ids;
    for (const auto& g : goal_scenarios) {
        check_id(g.id, "goal scenario");
        if (!scenario_ids.insert(g.id).second) {
            throw std::invalid_argument("duplicate goal scenario id: " + g.id);
        }
    }
    std::set<std::string> barrier_ids;
    for (const auto& b : barriers) {
        check_id(b.id, "barrier");
        if (!barrier_ids.insert(b.id).second) {
            throw std::invalid_argument("duplicate barrier id: " + b.id);
        }
    }
    for (const auto& name : baselines) {
        if (name != "Rand" && name != "PiCK" && name != "PStar") {
            throw std::invalid_argument("unknown baseline: " + name);
        }
    }
    for (const auto& p : transfer_pairs) {
        check_id(p.id, "transfer pair");
        if (scenario_ids.count(p.teacher_scenario) == 0) {
            throw std::invalid_argument("transfer pair references undefined teacher scenario: " +
                                        p.teacher_scenario);
        }
        if (scenario_ids.count(p.learner_scenario) == 0) {
            throw std::invalid_argument("transfer pair references undefined learner scenario: " +
                                        p.learner_scenario);
        }
    }
    learning.validate();
    estimator.validate();
    if (discovery_episodes < 1 || evaluation_episodes < 1 || macro_cap < 1) {
        throw std::invalid_argument("episode counts and macro_cap must be >= 1");
    }

    // Every (barrier, task) combination must yield a valid grid; this also
    // runs the start/goal coverage and reachability checks.
    for (const auto& b : barriers) {
        for (const auto& g : goal_scenarios) {
            for (const TaskSpec& task : {g.teacher, g.learner}) {
                GridSpec base(width, height, {}, task.start, task.goal);
                const ObstacleScenario scenario = build_scenario(b.kind, b.params, base);
                GridSpec probe(width, height, scenario.cells, task.start, task.goal);
                (void)probe;
            }
        }
    }
}

SuiteConfig default_config() {
    SuiteConfig c;
    c.width = 11;
    c.height = 11;
    // Every task crosses between the top and bottom rows with start/goal
    // columns inside [3, 7]. The bar spans columns 1..9 with pocket arms at
    // columns 1 and 9, so every monotone pretrained route crosses row 5
    // inside the pocket mouth: collisions are guaranteed for every scenario,
    // and the optimal detour always rounds the bar through the free columns
    // 0 or 10, which keeps L_opt constant across the barrier curriculum.
    // The heterogeneous learners run straight-column tasks, so their barrier
    // crossing column is fixed by the task rather than by pre-training noise.
    // The DS-DE learner runs the mirrored direction, bottom to top: it meets
    // every barrier from the side the teacher's macros were never meant for.
    const TaskSpec teacher{{0, 3}, {10, 7}};
    c.goal_scenarios = {
        {"SS-SE", teacher, {{0, 3}, {10, 7}}},
        {"SS-DE", teacher, {{0, 3}, {10, 3}}},
        {"DS-SE", teacher, {{0, 7}, {10, 7}}},
        {"DS-DE", teacher, {{10, 4}, {0, 4}}},
    };
    const ScenarioParams geometry{{5, 1}, 9, 3};
    c.barriers = {
        {"Wall", ScenarioKind::Wall, geometry},
        {"ReverseU", ScenarioKind::ReverseU, geometry},
        {"U", ScenarioKind::U, geometry},
        {"Superposition", ScenarioKind::Superposition, geometry},
    };
    c.baselines = {"Rand", "PiCK", "PStar"};
    for (const auto& g : c.goal_scenarios) {
        c.transfer_pairs.push_back({g.id, g.id, g.id});
    }
    // Enough pre-training that the greedy policy is optimal from every free
    // state, not just along the start-goal corridor: transferred macros can
    // drop an agent anywhere. Training runs in well under a second per table.
    c.learning.episodes = 50000;
    c.discovery_episodes = 10000;
    // Compact treatment window: short macros recur often enough to pass the
    // per-arm support threshold, and chains of them compose into long
    // detours under the greedy controller.
    c.macro_cap = 4;
    return c;
}

std::string config_to_json(const SuiteConfig& c) {
    json j;
    j["grid"] = {{"width", c.width}, {"height", c.height}};
    j["goal_scenarios"] = json::array();
    for (const auto& g : c.goal_scenarios) {
        j["goal_scenarios"].push_back({{"id", g.id},
                                       {"teacher",
                                        {{"start", cell_to_json(g.teacher.start)},
                                         {"goal", cell_to_json(g.teacher.goal)}}},
                                       {"learner",
                                        {{"start", cell_to_json(g.learner.start)},
                                         {"goal", cell_to_json(g.learner.goal)}}}});
    }
    j["barriers"] = json::array();
    for (const auto& b : c.barriers) {
        json jb = {{"id", b.id}, {"kind", scenario_kind_name(b.kind)}};
        if (b.kind != ScenarioKind::None) {
            jb["anchor"] = cell_to_json(b.params.anchor);
            jb["length"] = b.params.length;
            if (b.kind != ScenarioKind::Wall) jb["arm"] = b.params.arm_length;
        }
        j["barriers"].push_back(jb);
    }
    j["baselines"] = c.baselines;
    j["transfer"] = json::array();
    for (const auto& p : c.transfer_pairs) {
        j["transfer"].push_back(
            {{"id", p.id}, {"teacher", p.teacher_scenario}, {"learner", p.learner_scenario}});
    }
    j["learning"] = {{"learning_rate", c.learning.learning_rate},
                     {"discount", c.learning.discount},
                     {"epsilon", c.learning.epsilon},
                     {"epsilon_decay", c.learning.epsilon_decay},
                     {"epsilon_min", c.learning.epsilon_min},
                     {"episodes", c.learning.episodes},
                     {"max_steps", c.learning.max_steps}};
    json je = {{"backend", c.estimator.backend == EstimatorConfig::Backend::StratifiedMean
                               ? "StratifiedMean"
                               : "DoublyRobustForest"},
               {"min_samples_per_arm", c.estimator.min_samples_per_arm},
               {"shrinkage_weight", c.estimator.shrinkage_weight}};
    if (c.estimator.forest_params) {
        const auto& f = *c.estimator.forest_params;
        je["forest_params"] = {{"n_estimators", f.n_estimators},
                               {"min_samples_leaf", f.min_samples_leaf},
                               {"alpha", f.alpha},
                               {"cv", f.cv},
                               {"max_iter", f.max_iter}};
    }
    j["estimator"] = je;
    j["discovery"] = {{"episodes", c.discovery_episodes}, {"macro_cap", c.macro_cap}};
    j["evaluation"] = {{"episodes", c.evaluation_episodes}};
    j["master_seed"] = c.master_seed;
    j["output_dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

SuiteConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    SuiteConfig c = default_config();
    try {
        if (j.contains("grid")) {
            c.width = j["grid"].value("width", c.width);
            c.height = j["grid"].value("height", c.height);
        }
        if (j.contains("goal_scenarios")) {
            c.goal_scenarios.clear();
            for (const auto& jg : j["goal_scenarios"]) {
                GoalScenarioSpec g;
                g.id = jg.at("id").get<std::string>();
                g.teacher.start = cell_from_json(jg.at("teacher").at("start"));
                g.teacher.goal = cell_from_json(jg.at("teacher").at("goal"));
                g.learner.start = cell_from_json(jg.at("learner").at("start"));
                g.learner.goal = cell_from_json(jg.at("learner").at("goal"));
                c.goal_scenarios.push_back(std::move(g));
            }
        }
        if (j.contains("barriers")) {
            c.barriers.clear();
            for (const auto& jb : j["barriers"]) {
                BarrierSpec b;
                b.id = jb.at("id").get<std::string>();
                const auto kind = scenario_kind_from_name(jb.at("kind").get<std::string>());
                if (!kind) {
                    throw std::invalid_argument("unknown barrier kind: " +
                                                jb.at("kind").get<std::string>());
                }
                b.kind = *kind;
                if (b.kind != ScenarioKind::None) {
                    b.params.anchor = cell_from_json(jb.at("anchor"));
                    b.params.length = jb.at("length").get<int>();
                    b.params.arm_length = jb.value("arm", 0);
                }
                c.barriers.push_back(std::move(b));
            }
        }
        if (j.contains("baselines")) {
            c.baselines = j["baselines"].get<std::vector<std::string>>();
        }
        if (j.contains("transfer")) {
            c.transfer_pairs.clear();
            for (const auto& jp : j["transfer"]) {
                c.transfer_pairs.push_back({jp.at("id").get<std::string>(),
                                            jp.at("teacher").get<std::string>(),
                                            jp.at("learner").get<std::string>()});
            }
        }
        if (j.contains("learning")) {
            const auto& jl = j["learning"];
            c.learning.learning_rate = jl.value("learning_rate", c.learning.learning_rate);
            c.learning.discount = jl.value("discount", c.learning.discount);
            c.learning.epsilon = jl.value("epsilon", c.learning.epsilon);
            c.learning.epsilon_decay = jl.value("epsilon_decay", c.learning.epsilon_decay);
            c.learning.epsilon_min = jl.value("epsilon_min", c.learning.epsilon_min);
            c.learning.episodes = jl.value("episodes", c.learning.episodes);
            c.learning.max_steps = jl.value("max_steps", c.learning.max_steps);
        }
        if (j.contains("estimator")) {
            const auto& je = j["estimator"];
            const std::string backend = je.value("backend", std::string("StratifiedMean"));
            if (backend == "StratifiedMean") {
                c.estimator.backend = EstimatorConfig::Backend::StratifiedMean;
                c.estimator.forest_params.reset();
            } else if (backend == "DoublyRobustForest") {
                c.estimator.backend = EstimatorConfig::Backend::DoublyRobustForest;
                ForestParams f;
                if (je.contains("forest_params")) {
                    const auto& jf = je["forest_params"];
                    f.n_estimators = jf.value("n_estimators", f.n_estimators);
                    f.min_samples_leaf = jf.value("min_samples_leaf", f.min_samples_leaf);
                    f.alpha = jf.value("alpha", f.alpha);
                    f.cv = jf.value("cv", f.cv);
                    f.max_iter = jf.value("max_iter", f.max_iter);
                }
                c.estimator.forest_params = f;
            } else {
                throw std::invalid_argument("unknown estimator backend: " + backend);
            }
            c.estimator.min_samples_per_arm =
                je.value("min_samples_per_arm", c.estimator.min_samples_per_arm);
            c.estimator.shrinkage_weight =
                je.value("shrinkage_weight", c.estimator.shrinkage_weight);
        }
        if (j.contains("discovery")) {
            c.discovery_episodes = j["discovery"].value("episodes", c.discovery_episodes);
            c.macro_cap = j["discovery"].value("macro_cap", c.macro_cap);
        }
        if (j.contains("evaluation")) {
            c.evaluation_episodes = j["evaluation"].value("episodes", c.evaluation_episodes);
        }
        if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config field error: ") + e.what());
    }
    return c;
}

SuiteConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open config file: " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return config_from_json(os.str());
}

std::string config_hash(const SuiteConfig& config) {
    // The output directory is run plumbing, not part of the experiment
    // identity.
    SuiteConfig canonical = config;
    canonical.output_dir = "";
    const std::uint64_t h = fnv1a64(config_to_json(canonical));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    os << kResultsHeader << "\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%d,%llu,%d", r.mean, r.stddev, r.n,
                      static_cast<unsigned long long>(r.seed), r.failures);
        os << r.barrier << "," << r.goal_scenario << "," << r.agent << "," << r.metric << ","
           << buf << "\n";
    }
    return os.str();
}

std::vector<ResultRow> rows_from_csv(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line) || line != kResultsHeader) {
        throw std::invalid_argument("unrecognized results CSV header");
    }
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        auto next = [&]() {
            if (!std::getline(ls, field, ',')) {
                throw std::invalid_argument("truncated results CSV row");
            }
            return field;
        };
        ResultRow r;
        r.barrier = next();
        r.goal_scenario = next();
        r.agent = next();
        r.metric = next();
        r.mean = std::stod(next());
        r.stddev = std::stod(next());
        r.n = std::stoi(next());
        r.seed = std::stoull(next());
        r.failures = std::stoi(next());
        rows.push_back(std::move(r));
    }
    return rows;
}

namespace {

struct CellEvaluation {
    bool have_rand = false, have_pick = false, have_pstar = false;
    MeanStd rand, pick, pstar;
    int rand_failures = 0, pick_failures = 0, pstar_failures = 0;
    std::uint64_t rand_seed = 0, pick_seed = 0, pstar_seed = 0;
    std::vector<double> pick_per_episode;
};

std::string seed_hex(std::uint64_t s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(s));
    return buf;
}

} // namespace

SuiteResult run_suite(const SuiteConfig& config, int jobs) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();

    SuiteResult result;
    std::ostringstream meta;
    const std::string chash = config_hash(config);

    const bool want_rand =
        std::find(config.baselines.begin(), config.baselines.end(), "Rand") !=
        config.baselines.end();
    const bool want_pick =
        std::find(config.baselines.begin(), config.baselines.end(), "PiCK") !=
        config.baselines.end();
    const bool want_pstar =
        std::find(config.baselines.begin(), config.baselines.end(), "PStar") !=
        config.baselines.end();

    // ---- Stage 1: obstacle-free pre-training, one table per distinct task.
    std::set<TaskSpec> task_set;
    for (const auto& g : config.goal_scenarios) {
        task_set.insert(g.teacher);
        task_set.insert(g.learner);
    }
    const std::vector<TaskSpec> tasks(task_set.begin(), task_set.end());
    std::map<TaskSpec, QTable> pretrained;
    std::vector<QTable> pretrain_slots(tasks.size());
    std::vector<std::string> pretrain_notes(tasks.size());
    run_parallel(static_cast<int>(tasks.size()), jobs, [&](int i) {
        const TaskSpec& task = tasks[static_cast<size_t>(i)];
        GridSpec grid(config.width, config.height, {}, task.start, task.goal);
        LearningConfig lc = config.learning;
        lc.seed = derive_seed(config.master_seed, "pretrain", {task.id()});
        pretrain_slots[static_cast<size_t>(i)] = train(grid, lc);
        const EpisodeTrace probe = run_policy(
            grid, GreedyPolicy{&pretrain_slots[static_cast<size_t>(i)]}, lc.max_steps);
        const int l_opt = optimal_path_length(grid);
        std::ostringstream note;
        note << "pretrain " << task.id() << " "
             << (probe.reached_goal && probe.path_length() == l_opt ? "optimal" : "SUBOPTIMAL")
             << " greedy_len=" << probe.path_length() << " l_opt=" << l_opt;
        pretrain_notes[static_cast<size_t>(i)] = note.str();
    });
    for (size_t i = 0; i < tasks.size(); ++i) {
        pretrained.emplace(tasks[i], std::move(pretrain_slots[i]));
        meta << pretrain_notes[i] << "\n";
        if (pretrain_notes[i].find("SUBOPTIMAL") != std::string::npos) {
            result.all_converged = false;
            result.warnings.push_back(pretrain_notes[i]);
        }
    }

    // ---- Stage 2: per (barrier, task): P* retraining and discovery + fit.
    struct BarrierTaskWork {
        size_t barrier_index;
        TaskSpec task;
        bool needs_pstar;
    };
    std::vector<BarrierTaskWork> work;
    for (size_t bi = 0; bi < config.barriers.size(); ++bi) {
        std::set<TaskSpec> learner_tasks;
        for (const auto& g : config.goal_scenarios) learner_tasks.insert(g.learner);
        for (const TaskSpec& task : tasks) {
            work.push_back({bi, task, want_pstar && learner_tasks.count(task) > 0});
        }
    }
    struct BarrierTaskOut {
        LookupModel model;
        QTable pstar;
        bool has_pstar = false;
        std::string pstar_note;
        std::string discovery_csv;
        std::vector<std::string> warnings;
    };
    std::vector<BarrierTaskOut> work_out(work.size());
    run_parallel(static_cast<int>(work.size()), jobs, [&](int wi) {
        const BarrierTaskWork& w = work[static_cast<size_t>(wi)];
        BarrierTaskOut& out = work_out[static_cast<size_t>(wi)];
        const BarrierSpec& barrier = config.barriers[w.barrier_index];
        GridSpec base(config.width, config.height, {}, w.task.start, w.task.goal);
        const ObstacleScenario scenario = build_scenario(barrier.kind, barrier.params, base);
        GridSpec grid(config.width, config.height, scenario.cells, w.task.start, w.task.goal);

        if (w.needs_pstar) {
            LearningConfig lc = config.learning;
            lc.seed = derive_seed(config.master_seed, "pstar", {barrier.id, w.task.id()});
            out.pstar = train(grid, lc);
            out.has_pstar = true;
            const EpisodeTrace probe = run_policy(grid, GreedyPolicy{&out.pstar}, lc.max_steps);
            const int l_opt = optimal_path_length(grid);
            std::ostringstream note;
            note << "pstar " << barrier.id << " " << w.task.id() << " "
                 << (probe.reached_goal && probe.path_length() == l_opt ? "optimal"
                                                                        : "SUBOPTIMAL")
                 << " greedy_len=" << probe.path_length() << " l_opt=" << l_opt;
            out.pstar_note = note.str();
        }

        ModelProvenance provenance;
        provenance.scenario_id = barrier.id;
        provenance.teacher_goal_id = w.task.id();
        provenance.fit_id =
            seed_hex(derive_seed(config.master_seed, "fit", {barrier.id, w.task.id()}));
        provenance.config_hash = chash;
        if (barrier.kind == ScenarioKind::None) {
            out.model.provenance = provenance; // nothing to discover without obstacles
        } else {
            DiscoveryConfig dc;
            dc.episodes = config.discovery_episodes;
            dc.seed = derive_seed(config.master_seed, "discover", {barrier.id, w.task.id()});
            dc.max_steps = config.learning.max_steps;
            dc.macro_cap = config.macro_cap;
            const std::vector<RAExperience> experiences = discover(grid, pretrained.at(w.task), dc);
            out.discovery_csv = experiences_to_csv(experiences);
            EffectDataset dataset(experiences);
            if (dataset.empty()) {
                out.model.provenance = provenance;
                out.warnings.push_back("insufficient discovery data for " + barrier.id + "/" +
                                       w.task.id());
            } else {
                out.model = fit(dataset, config.estimator, provenance);
                if (!out.model.warning.empty()) {
                    out.warnings.push_back(barrier.id + "/" + w.task.id() + ": " +
                                           out.model.warning);
                }
            }
        }
    });

    std::map<std::pair<std::string, std::string>, const LookupModel*> models;
    std::map<std::pair<std::string, std::string>, const QTable*> pstar_tables;
    for (size_t wi = 0; wi < work.size(); ++wi) {
        const BarrierTaskWork& w = work[wi];
        const BarrierSpec& barrier = config.barriers[w.barrier_index];
        const auto key = std::make_pair(barrier.id, w.task.id());
        models[key] = &work_out[wi].model;
        if (work_out[wi].has_pstar) pstar_tables[key] = &work_out[wi].pstar;
        if (!work_out[wi].pstar_note.empty()) {
            meta << work_out[wi].pstar_note << "\n";
            if (work_out[wi].pstar_note.find("SUBOPTIMAL") != std::string::npos) {
                result.all_converged = false;
                result.warnings.push_back(work_out[wi].pstar_note);
            }
        }
        for (const auto& warning : work_out[wi].warnings) result.warnings.push_back(warning);
        const std::string stem = barrier.id + "__" + sanitize(w.task.id());
        result.model_files[stem + ".csv"] = work_out[wi].model.serialize();
        if (!work_out[wi].discovery_csv.empty()) {
            result.experience_files[stem + ".csv"] = work_out[wi].discovery_csv;
        }
    }

    // ---- Stage 3: per (barrier, goal scenario): baseline evaluations.
    struct CellWork {
        size_t barrier_index;
        size_t scenario_index;
    };
    std::vector<CellWork> cells;
    for (size_t bi = 0; bi < config.barriers.size(); ++bi) {
        for (size_t gi = 0; gi < config.goal_scenarios.size(); ++gi) {
            cells.push_back({bi, gi});
        }
    }
    std::vector<CellEvaluation> cell_out(cells.size());
    const int episodes = config.evaluation_episodes;
    run_parallel(static_cast<int>(cells.size()), jobs, [&](int ci) {
        const CellWork& cw = cells[static_cast<size_t>(ci)];
        CellEvaluation& out = cell_out[static_cast<size_t>(ci)];
        const BarrierSpec& barrier = config.barriers[cw.barrier_index];
        const GoalScenarioSpec& scenario = config.goal_scenarios[cw.scenario_index];
        const TaskSpec& learner = scenario.learner;
        GridSpec base(config.width, config.height, {}, learner.start, learner.goal);
        const ObstacleScenario obstacle = build_scenario(barrier.kind, barrier.params, base);
        GridSpec grid(config.width, config.height, obstacle.cells, learner.start, learner.goal);
        const int l_opt = optimal_path_length(grid);
        const int max_steps = config.learning.max_steps;

        if (want_rand) {
            out.have_rand = true;
            out.rand_seed = derive_seed(config.master_seed, "eval-rand",
                                        {barrier.id, scenario.id});
            std::vector<double> values;
            values.reserve(static_cast<size_t>(episodes));
            for (int e = 0; e < episodes; ++e) {
                RandomPolicy policy{derive_seed(out.rand_seed, static_cast<std::uint64_t>(e))};
                const EpisodeTrace trace = run_policy(grid, policy, max_steps);
                const bool failed = !trace.reached_goal;
                values.push_back(ofpr(l_opt, trace.path_length(), failed).value);
                out.rand_failures += failed ? 1 : 0;
            }
            out.rand = mean_std(values);
        }

        if (want_pick || !config.transfer_pairs.empty()) {
            out.have_pick = true;
            const TransferSeeds seeds{
                derive_seed(config.master_seed, "eval-ck-roll", {barrier.id, scenario.id}),
                derive_seed(config.master_seed, "eval-ck-fall", {barrier.id, scenario.id})};
            const TransferAssignment assignment{models.at({barrier.id, learner.id()}),
                                                &pretrained.at(learner),
                                                grid,
                                                barrier.id,
                                                seeds,
                                                max_steps};
            out.pick_seed = assignment.seeds.rollout;
            const TransferEvaluation eval = evaluate_transfer(assignment, episodes);
            out.pick = {eval.mean_ofpr, eval.std_ofpr};
            out.pick_failures = eval.failures;
            out.pick_per_episode.reserve(eval.per_episode.size());
            for (const auto& v : eval.per_episode) out.pick_per_episode.push_back(v.value);
        }

        if (want_pstar) {
            out.have_pstar = true;
            const QTable* table = pstar_tables.at({barrier.id, learner.id()});
            out.pstar_seed = derive_seed(config.master_seed, "pstar", {barrier.id, learner.id()});
            std::vector<double> values;
            values.reserve(static_cast<size_t>(episodes));
            for (int e = 0; e < episodes; ++e) {
                const EpisodeTrace trace = run_policy(grid, GreedyPolicy{table}, max_steps);
                const bool failed = !trace.reached_goal;
                values.push_back(ofpr(l_opt, trace.path_length(), failed).value);
                out.pstar_failures += failed ? 1 : 0;
            }
            out.pstar = mean_std(values);
        }
    });

    // ---- Stage 4: transfer pairs (T_CK against the paired L_CK episodes).
    struct PairOut {
        MeanStd delta;
        int failures = 0;
        std::uint64_t seed = 0;
        bool valid = false;
        size_t cell_index = 0;
    };
    std::vector<PairOut> pair_out;
    std::vector<std::pair<size_t, size_t>> pair_work; // (barrier idx, pair idx)
    for (size_t bi = 0; bi < config.barriers.size(); ++bi) {
        for (size_t pi = 0; pi < config.transfer_pairs.size(); ++pi) {
            pair_work.push_back({bi, pi});
        }
    }
    pair_out.resize(pair_work.size());
    auto scenario_index_of = [&](const std::string& id) {
        for (size_t gi = 0; gi < config.goal_scenarios.size(); ++gi) {
            if (config.goal_scenarios[gi].id == id) return gi;
        }
        throw std::logic_error("scenario id not found: " + id);
    };
    run_parallel(static_cast<int>(pair_work.size()), jobs, [&](int pi) {
        const auto [bi, p] = pair_work[static_cast<size_t>(pi)];
        PairOut& out = pair_out[static_cast<size_t>(pi)];
        const BarrierSpec& barrier = config.barriers[bi];
        const TransferPairSpec& pair = config.transfer_pairs[p];
        const size_t gi = scenario_index_of(pair.learner_scenario);
        const GoalScenarioSpec& learner_scenario = config.goal_scenarios[gi];
        const GoalScenarioSpec& teacher_scenario =
            config.goal_scenarios[scenario_index_of(pair.teacher_scenario)];
        const TaskSpec& learner = learner_scenario.learner;
        out.cell_index = bi * config.goal_scenarios.size() + gi;

        GridSpec base(config.width, config.height, {}, learner.start, learner.goal);
        const ObstacleScenario obstacle = build_scenario(barrier.kind, barrier.params, base);
        GridSpec grid(config.width, config.height, obstacle.cells, learner.start, learner.goal);

        // Same seeds as the cell's PiCK evaluation: the two runs differ only
        // in the model, so Delta_CK is a paired comparison.
        const TransferSeeds seeds{
            derive_seed(config.master_seed, "eval-ck-roll", {barrier.id, learner_scenario.id}),
            derive_seed(config.master_seed, "eval-ck-fall", {barrier.id, learner_scenario.id})};
        const TransferAssignment assignment{models.at({barrier.id, teacher_scenario.teacher.id()}),
                                            &pretrained.at(learner),
                                            grid,
                                            barrier.id,
                                            seeds,
                                            config.learning.max_steps};
        out.seed = assignment.seeds.rollout;
        const TransferEvaluation t_eval = evaluate_transfer(assignment, episodes);
        const CellEvaluation& cell = cell_out[out.cell_index];
        std::vector<double> deltas;
        deltas.reserve(static_cast<size_t>(episodes));
        for (int e = 0; e < episodes; ++e) {
            deltas.push_back(t_eval.per_episode[static_cast<size_t>(e)].value -
                             cell.pick_per_episode[static_cast<size_t>(e)]);
        }
        out.delta = mean_std(deltas);
        out.failures = t_eval.failures;
        out.valid = true;
    });

    // ---- Stage 5: deterministic ordered row assembly.
    for (size_t bi = 0; bi < config.barriers.size(); ++bi) {
        const BarrierSpec& barrier = config.barriers[bi];
        for (size_t gi = 0; gi < config.goal_scenarios.size(); ++gi) {
            const GoalScenarioSpec& scenario = config.goal_scenarios[gi];
            const CellEvaluation& cell = cell_out[bi * config.goal_scenarios.size() + gi];
            for (const std::string& baseline : config.baselines) {
                ResultRow row;
                row.barrier = barrier.id;
                row.goal_scenario = scenario.id;
                row.metric = "OFPR";
                row.n = episodes;
                if (baseline == "Rand" && cell.have_rand) {
                    row.agent = "Rand";
                    row.mean = cell.rand.mean;
                    row.stddev = cell.rand.stddev;
                    row.seed = cell.rand_seed;
                    row.failures = cell.rand_failures;
                } else if (baseline == "PiCK" && cell.have_pick) {
                    row.agent = "PiCK";
                    row.mean = cell.pick.mean;
                    row.stddev = cell.pick.stddev;
                    row.seed = cell.pick_seed;
                    row.failures = cell.pick_failures;
                } else if (baseline == "PStar" && cell.have_pstar) {
                    row.agent = "PStar";
                    row.mean = cell.pstar.mean;
                    row.stddev = cell.pstar.stddev;
                    row.seed = cell.pstar_seed;
                    row.failures = cell.pstar_failures;
                } else {
                    continue;
                }
                result.rows.push_back(std::move(row));
            }
            if (cell.have_rand && cell.have_pick && cell.have_pstar &&
                cell.pstar.mean > cell.rand.mean) {
                ResultRow row;
                row.barrier = barrier.id;
                row.goal_scenario = scenario.id;
                row.agent = "PiCK";
                row.metric = "GapClosure";
                row.mean = gap_closure(cell.rand.mean, cell.pick.mean, cell.pstar.mean);
                row.stddev = 0.0;
                row.n = episodes;
                row.seed = cell.pick_seed;
                row.failures = 0;
                result.rows.push_back(std::move(row));
            } else if (cell.have_rand && cell.have_pick && cell.have_pstar) {
                result.warnings.push_back("gap closure skipped for " + barrier.id + "/" +
                                          scenario.id + " (PStar did not beat Rand)");
            }
            for (size_t pw = 0; pw < pair_work.size(); ++pw) {
                const auto [pbi, pp] = pair_work[pw];
                if (pbi != bi || !pair_out[pw].valid) continue;
                const TransferPairSpec& pair = config.transfer_pairs[pp];
                if (pair.learner_scenario != scenario.id) continue;
                ResultRow row;
                row.barrier = barrier.id;
                row.goal_scenario = scenario.id;
                row.agent = "CK:" + pair.teacher_scenario;
                row.metric = "DeltaCK";
                row.mean = pair_out[pw].delta.mean;
                row.stddev = pair_out[pw].delta.stddev;
                row.n = episodes;
                row.seed = pair_out[pw].seed;
                row.failures = pair_out[pw].failures;
                result.rows.push_back(std::move(row));
            }
        }
    }

    result.results_csv = rows_to_csv(result.rows);

    const auto t1 = std::chrono::steady_clock::now();
    result.runtime_seconds = std::chrono::duration<double>(t1 - t0).count();

    std::ostringstream header;
    header << "cktx suite run\n";
    header << "version " << kVersion << "\n";
    header << "config_hash " << chash << "\n";
    header << "master_seed " << config.master_seed << "\n";
    header << "cells " << config.barriers.size() << " barriers x " << config.goal_scenarios.size()
           << " goal scenarios\n";
    header << "convergence:\n" << meta.str();
    header << "warnings:\n";
    for (const auto& warning : result.warnings) header << "- " << warning << "\n";
    if (result.warnings.empty()) header << "- none\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "runtime_seconds %.3f\n", result.runtime_seconds);
    header << buf;
    result.meta = header.str();

    return result;
}

void write_suite_outputs(const SuiteResult& result, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    fs::create_directories(out_dir / "models");
    fs::create_directories(out_dir / "experiences");
    fs::create_directories(out_dir / "figures");

    auto write_file = [](const fs::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write " + path.string());
        }
        out << content;
    };
    write_file(out_dir / "results.csv", result.results_csv);
    write_file(out_dir / "meta.txt", result.meta);
    for (const auto& [name, content] : result.model_files) {
        write_file(out_dir / "models" / name, content);
    }
    for (const auto& [name, content] : result.experience_files) {
        write_file(out_dir / "experiences" / name, content);
    }
    emit_plots(result.rows, out_dir / "figures");
}

} // namespace cktx
