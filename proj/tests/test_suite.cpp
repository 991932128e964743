#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cktx/suite.hpp"
#include "cktx/svg_plots.hpp"

using namespace cktx;
namespace fs = std::filesystem;

namespace {

// Default suite shrunk to unit-test size; convergence is not expected here.
SuiteConfig tiny_config() {
    SuiteConfig c = default_config();
    c.learning.episodes = 150;
    c.discovery_episodes = 25;
    c.evaluation_episodes = 6;
    c.master_seed = 3;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST_CASE("config JSON round-trips and hashes stably") {
    const SuiteConfig c = default_config();
    const std::string text = config_to_json(c);
    const SuiteConfig restored = config_from_json(text);
    CHECK(config_to_json(restored) == text);
    CHECK(config_hash(restored) == config_hash(c));
    SuiteConfig changed = restored;
    changed.master_seed += 1;
    CHECK(config_hash(changed) != config_hash(c));
}

TEST_CASE("the checked-in default config matches the embedded default") {
    const fs::path path = fs::path(CKTX_SOURCE_DIR) / "configs" / "default.json";
    REQUIRE(fs::exists(path));
    const SuiteConfig from_file = load_config(path);
    CHECK(config_to_json(from_file) == config_to_json(default_config()));
}

TEST_CASE("config validation rejects broken references and geometry") {
    SuiteConfig c = default_config();
    c.transfer_pairs.push_back({"bad", "NOPE", "SS-SE"});
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = default_config();
    c.baselines.push_back("Oracle");
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = default_config();
    c.barriers[0].params.anchor = {0, 3}; // covers the SS-SE start
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    c = default_config();
    c.barriers[0].params.length = 20; // runs out of bounds
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    CHECK_THROWS_AS(config_from_json("not json"), std::invalid_argument);
    CHECK_NOTHROW(default_config().validate());
}

TEST_CASE("results CSV round-trips") {
    std::vector<ResultRow> rows;
    rows.push_back({"Wall", "SS-SE", "Rand", "OFPR", 0.125, 0.011, 100, 42, 17});
    rows.push_back({"Wall", "SS-SE", "CK:SS-SE", "DeltaCK", -0.03, 0.002, 100, 43, 0});
    const std::string csv = rows_to_csv(rows);
    const auto restored = rows_from_csv(csv);
    REQUIRE(restored.size() == 2);
    CHECK(rows_to_csv(restored) == csv);
    CHECK(restored[1].agent == "CK:SS-SE");
    CHECK_THROWS_AS(rows_from_csv("wrong,header\n1,2\n"), std::invalid_argument);
}

TEST_CASE("suite produces the expected row inventory and is seed-deterministic") {
    const SuiteConfig c = tiny_config();
    const SuiteResult first = run_suite(c);
    // 4 barriers x 4 scenarios x 3 baselines OFPR rows, plus one GapClosure
    // and one DeltaCK row per cell.
    int ofpr = 0, delta = 0, gap = 0;
    for (const auto& r : first.rows) {
        if (r.metric == "OFPR") ++ofpr;
        else if (r.metric == "DeltaCK") ++delta;
        else if (r.metric == "GapClosure") ++gap;
    }
    CHECK(ofpr == 48);
    CHECK(delta == 16);
    // GapClosure rows need PStar to beat Rand; with this deliberately
    // under-trained config some cells may skip the row. The converged full
    // suite (acceptance) requires all 16.
    CHECK(gap <= 16);

    const SuiteResult second = run_suite(c);
    CHECK(second.results_csv == first.results_csv);
    CHECK(second.model_files == first.model_files);
    CHECK(second.experience_files == first.experience_files);

    SuiteConfig reseeded = c;
    reseeded.master_seed = 4;
    CHECK(run_suite(reseeded).results_csv != first.results_csv);
}

TEST_CASE("parallel execution is byte-identical to sequential") {
    const SuiteConfig c = tiny_config();
    const SuiteResult sequential = run_suite(c, 1);
    const SuiteResult parallel = run_suite(c, 2);
    CHECK(parallel.results_csv == sequential.results_csv);
    CHECK(parallel.model_files == sequential.model_files);
}

TEST_CASE("removing a barrier leaves the other barriers' rows untouched") {
    SuiteConfig both = tiny_config();
    both.barriers = {both.barriers[0], both.barriers[2]}; // Wall, U
    SuiteConfig wall_only = both;
    wall_only.barriers = {both.barriers[0]};

    const SuiteResult full = run_suite(both);
    const SuiteResult reduced = run_suite(wall_only);
    std::vector<ResultRow> full_wall_rows;
    for (const auto& r : full.rows) {
        if (r.barrier == "Wall") full_wall_rows.push_back(r);
    }
    CHECK(rows_to_csv(full_wall_rows) == rows_to_csv(reduced.rows));
}

TEST_CASE("a suite with no obstacles gives every non-random baseline OFPR 1.0") {
    SuiteConfig c = default_config();
    c.barriers = {{"None", ScenarioKind::None, {}}};
    c.discovery_episodes = 10;
    c.evaluation_episodes = 10;
    c.master_seed = 5;
    const SuiteResult result = run_suite(c);
    for (const auto& r : result.rows) {
        if (r.metric == "OFPR" && r.agent != "Rand") {
            CHECK(r.mean == 1.0);
            CHECK(r.failures == 0);
        }
        if (r.metric == "OFPR" && r.agent == "Rand") {
            CHECK(r.mean < 1.0);
        }
        if (r.metric == "DeltaCK") {
            CHECK(r.mean == 0.0);
        }
    }
}

TEST_CASE("suite outputs land on disk with figures") {
    const fs::path out = fs::temp_directory_path() / "cktx_suite_test_out";
    fs::remove_all(out);
    SuiteConfig c = tiny_config();
    c.barriers = {c.barriers[0]};
    const SuiteResult result = run_suite(c);
    write_suite_outputs(result, out);
    CHECK(fs::exists(out / "results.csv"));
    CHECK(fs::exists(out / "meta.txt"));
    CHECK(fs::exists(out / "figures" / "ofpr_by_barrier.svg"));
    CHECK(fs::exists(out / "figures" / "delta_ck_by_barrier.svg"));
    CHECK(!result.model_files.empty());
    for (const auto& [name, content] : result.model_files) {
        CHECK(fs::exists(out / "models" / name));
        CHECK(slurp(out / "models" / name) == content);
    }
    CHECK(slurp(out / "results.csv") == result.results_csv);
    fs::remove_all(out);
}

TEST_CASE("plots: structure, single barrier, and empty input") {
    const fs::path out = fs::temp_directory_path() / "cktx_plot_test_out";
    fs::remove_all(out);
    SuiteConfig c = tiny_config();
    c.barriers = {c.barriers[0]};
    const SuiteResult result = run_suite(c);

    SUBCASE("full table renders both charts with one series per scenario") {
        const auto files = emit_plots(result.rows, out);
        REQUIRE(files.size() == 2);
        const std::string svg = slurp(out / "ofpr_by_barrier.svg");
        CHECK(svg.find("<svg") != std::string::npos);
        size_t polylines = 0;
        for (size_t pos = svg.find("<polyline"); pos != std::string::npos;
             pos = svg.find("<polyline", pos + 1)) {
            ++polylines;
        }
        CHECK(polylines == 4); // one pi_CK series per goal scenario
        CHECK(svg.find("Wall") != std::string::npos);
    }
    SUBCASE("empty input is an error and writes nothing") {
        CHECK_THROWS_AS(emit_plots({}, out / "none"), std::invalid_argument);
        CHECK_FALSE(fs::exists(out / "none"));
        CHECK_THROWS_AS(emit_plots_from_csv("bad header\n", out / "none"),
                        std::invalid_argument);
    }
    fs::remove_all(out);
}
