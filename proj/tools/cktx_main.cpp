#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "cktx/suite.hpp"
#include "cktx/svg_plots.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"cktx - causal knowledge transfer gridworld laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;

    auto* run = app.add_subcommand("run", "run the experiment suite");
    run->add_option("--config", config_path, "suite configuration file (JSON)");
    run->add_option("--out", out_dir, "output directory (overrides config)");
    run->add_option("--seed", seed, "master seed (overrides config)")
        ->each([&](const std::string&) { seed_set = true; });
    run->add_option("--jobs", jobs, "parallel workers for independent cells")
        ->check(CLI::PositiveNumber);

    std::string csv_path;
    std::string plot_out;
    auto* plot = app.add_subcommand("plot", "render SVG charts from a results CSV");
    plot->add_option("--csv", csv_path, "results.csv produced by run")->required();
    plot->add_option("--out", plot_out, "output directory for figures")->required();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "validate a suite configuration");
    validate->add_option("--config", validate_path, "suite configuration file (JSON)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            cktx::SuiteConfig config =
                config_path.empty() ? cktx::default_config() : cktx::load_config(config_path);
            if (seed_set) config.master_seed = seed;
            if (!out_dir.empty()) config.output_dir = out_dir;
            std::cout << "running suite: " << config.barriers.size() << " barriers x "
                      << config.goal_scenarios.size() << " goal scenarios, master seed "
                      << config.master_seed << "\n";
            const cktx::SuiteResult result = cktx::run_suite(config, jobs);
            cktx::write_suite_outputs(result, config.output_dir);
            std::cout << result.meta;
            std::cout << "wrote " << (fs::path(config.output_dir) / "results.csv").string()
                      << " (" << result.rows.size() << " rows)\n";
            if (!result.all_converged) {
                std::cerr << "warning: some policies did not converge; see meta.txt\n";
            }
            return 0;
        }
        if (plot->parsed()) {
            std::ifstream in(csv_path, std::ios::binary);
            if (!in) {
                std::cerr << "cannot open " << csv_path << "\n";
                return 1;
            }
            std::ostringstream os;
            os << in.rdbuf();
            const auto files = cktx::emit_plots_from_csv(os.str(), plot_out);
            for (const auto& f : files) {
                std::cout << "wrote " << (fs::path(plot_out) / f).string() << "\n";
            }
            return 0;
        }
        if (validate->parsed()) {
            const cktx::SuiteConfig config = cktx::load_config(validate_path);
            config.validate();
            std::cout << "config ok: " << config.barriers.size() << " barriers, "
                      << config.goal_scenarios.size() << " goal scenarios, "
                      << config.transfer_pairs.size() << " transfer pairs (hash "
                      << cktx::config_hash(config) << ")\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
