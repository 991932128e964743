#ifndef CKTX_SUITE_HPP
#define CKTX_SUITE_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cktx/causal_estimator.hpp"
#include "cktx/grid_env.hpp"
#include "cktx/recovery_discovery.hpp"
#include "cktx/tabular_rl.hpp"

namespace cktx {

inline constexpr const char* kVersion = "0.1.0";

struct TaskSpec {
    Cell start;
    Cell goal;

    bool operator==(const TaskSpec&) const = default;
    auto operator<=>(const TaskSpec&) const = default;
    std::string id() const; // e.g. "1,1->9,9"
};

struct GoalScenarioSpec {
    std::string id; // SS-SE, SS-DE, DS-SE, DS-DE
    TaskSpec teacher;
    TaskSpec learner;
};

struct BarrierSpec {
    std::string id;
    ScenarioKind kind = ScenarioKind::None;
    ScenarioParams params;
};

struct TransferPairSpec {
    std::string id;
    std::string teacher_scenario; // teacher task comes from this scenario
    std::string learner_scenario; // learner task and evaluation cell
};

struct SuiteConfig {
    int width = 11;
    int height = 11;
    std::vector<GoalScenarioSpec> goal_scenarios;
    std::vector<BarrierSpec> barriers;
    std::vector<std::string> baselines; // subset of {Rand, PiCK, PStar}
    std::vector<TransferPairSpec> transfer_pairs;
    LearningConfig learning;   // per-stage seeds are derived, learning.seed is ignored
    EstimatorConfig estimator;
    int discovery_episodes = 500;
    int evaluation_episodes = 100;
    int macro_cap = 100;
    std::uint64_t master_seed = 7;
    std::string output_dir = "out";

    void validate() const;
};

// The checked-in default: the full study (4 barriers x 4 goal scenarios x
// 3 baselines plus the per-scenario transfer pairs).
SuiteConfig default_config();

std::string config_to_json(const SuiteConfig& config);
SuiteConfig config_from_json(const std::string& json_text);
SuiteConfig load_config(const std::filesystem::path& path);

// FNV-1a of the canonical JSON form, as fixed-width hex.
std::string config_hash(const SuiteConfig& config);

struct ResultRow {
    std::string barrier;
    std::string goal_scenario;
    std::string agent;  // Rand | PiCK | PStar | CK:<teacher scenario id>
    std::string metric; // OFPR | DeltaCK | GapClosure
    double mean = 0.0;
    double stddev = 0.0;
    int n = 0;
    std::uint64_t seed = 0;
    int failures = 0;
};

inline constexpr const char* kResultsHeader =
    "barrier,goal_scenario,agent,metric,mean,std,n,seed,failures";

std::string rows_to_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> rows_from_csv(const std::string& csv);

struct SuiteResult {
    std::vector<ResultRow> rows;
    std::string results_csv;
    std::string meta; // includes wall-clock runtime; not part of the determinism contract
    std::map<std::string, std::string> model_files;      // under models/
    std::map<std::string, std::string> experience_files; // under experiences/
    std::vector<std::string> warnings;
    bool all_converged = true;
    double runtime_seconds = 0.0;
};

// Runs every stage for every barrier x goal-scenario cell: obstacle-free
// pre-training, full retraining (P*), Rand evaluation, discovery + causal fit
// (pi_CK), and the teacher->learner transfer pairs (T_CK, Delta_CK,
// GapClosure). All stage seeds derive from the master seed; identical configs
// produce byte-identical results_csv, model and experience files.
SuiteResult run_suite(const SuiteConfig& config, int jobs = 1);

// Writes results.csv, meta.txt, models/, experiences/ and figures/.
void write_suite_outputs(const SuiteResult& result, const std::filesystem::path& out_dir);

} // namespace cktx

#endif
