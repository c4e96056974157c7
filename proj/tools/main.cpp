#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bcsfl/runner.hpp"

namespace {

constexpr const char* kVersion = "bcsfl 0.1.0";

struct SimulateArgs {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BCS-FL swarm federated-learning simulator"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(0, 1);

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "run a configured experiment");
    simulate->add_option("--config", sim.config_path, "experiment config file")
        ->required();
    // Flag overrides win over config-file values.
    std::string scheme, dataset, partition, out;
    int k = -1, uavs = -1, rounds = -1;
    long long seed = -1;
    simulate->add_option("--scheme", scheme, "conventional|fca|kha");
    simulate->add_option("--k", k, "hop limit for kha");
    simulate->add_option("--uavs", uavs, "swarm size");
    simulate->add_option("--rounds", rounds, "training rounds per layout");
    simulate->add_option("--seed", seed, "master seed");
    simulate->add_option("--dataset", dataset, "synthetic|mnist");
    simulate->add_option("--partition", partition, "iid|noniid");
    simulate->add_option("--out", out, "output CSV path ('-' = stdout)");

    std::vector<std::string> csv_paths;
    double threshold = 0.9;
    bool tsv = false;
    CLI::App* summ = app.add_subcommand("summarize", "aggregate metrics CSVs");
    summ->add_option("csv", csv_paths, "metrics CSV files")->required()->expected(-1);
    summ->add_option("--threshold", threshold, "accuracy threshold (default 0.9)");
    summ->add_flag("--tsv", tsv, "machine-readable TSV output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            bcsfl::ExperimentConfig config = bcsfl::parse_config_file(sim.config_path);
            if (!scheme.empty()) bcsfl::apply_override(config, "scheme", scheme);
            if (k >= 0) bcsfl::apply_override(config, "k", std::to_string(k));
            if (uavs >= 0) bcsfl::apply_override(config, "uavs", std::to_string(uavs));
            if (rounds >= 0) bcsfl::apply_override(config, "rounds", std::to_string(rounds));
            if (seed >= 0) bcsfl::apply_override(config, "seed", std::to_string(seed));
            if (!dataset.empty()) bcsfl::apply_override(config, "dataset", dataset);
            if (!partition.empty()) bcsfl::apply_override(config, "partition", partition);
            if (!out.empty()) bcsfl::apply_override(config, "out", out);
            config.validate();
            bcsfl::run_experiment_to_path(config, std::cerr);
            return 0;
        }
        if (summ->parsed()) {
            const auto rows = bcsfl::summarize(csv_paths, threshold);
            bcsfl::print_summary(rows, tsv, std::cout);
            return 0;
        }
        std::cerr << app.help();
        return 2;
    } catch (const bcsfl::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
