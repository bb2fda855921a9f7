// alsched: run active learning schedule experiments, synthesize streams and
// rank features of finished runs.

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "alsched/harness.hpp"

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_mt("alsched"));

    CLI::App app{"Budget-constrained active learning schedules for regression"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string level = "info";
    app.add_option("--log-level", level, "trace, debug, info, warn, error or off")->capture_default_str();

    std::string run_config;
    std::optional<std::string> run_out;
    std::optional<std::uint64_t> run_seed;
    std::optional<int> run_parallel;
    auto* run = app.add_subcommand("run", "Run every configured experiment and write the CSV reports");
    run->add_option("config", run_config, "Harness configuration (YAML)")->required();
    run->add_option("--out", run_out, "Output directory (overrides the config)");
    run->add_option("--seed", run_seed, "Run with this single seed instead of the configured list");
    run->add_option("--parallel", run_parallel, "Concurrent runs")->check(CLI::PositiveNumber);

    std::string synth_config, synth_out;
    std::optional<std::uint64_t> synth_seed;
    auto* synth = app.add_subcommand("synth", "Write the synthetic pool stream, labels and holdout as CSV");
    synth->add_option("config", synth_config, "Harness configuration (YAML)")->required();
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--seed", synth_seed, "Seed (defaults to the first configured seed)");

    std::string imp_dir;
    int imp_repeats = 10;
    std::optional<std::string> imp_experiment;
    std::optional<std::uint64_t> imp_seed;
    auto* importance = app.add_subcommand("importance", "Permutation importance of a finished run's final model");
    importance->add_option("run_dir", imp_dir, "Output directory of a finished run")->required();
    importance->add_option("--repeats", imp_repeats, "Permutations per feature")->capture_default_str();
    importance->add_option("--experiment", imp_experiment, "Experiment name (defaults to the first)");
    importance->add_option("--seed", imp_seed, "Seed (defaults to the first configured seed)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : alsched::kExitConfig;
    }
    spdlog::set_level(spdlog::level::from_str(level));

    if (*run) {
        alsched::RunOptions options;
        if (run_out) options.output = *run_out;
        options.seed = run_seed;
        options.parallel = run_parallel;
        return alsched::cmd_run(run_config, options, std::cout, std::cerr);
    }
    if (*synth) return alsched::cmd_synth(synth_config, synth_out, synth_seed, std::cout, std::cerr);
    return alsched::cmd_importance(imp_dir, imp_repeats, imp_experiment, imp_seed, std::cout, std::cerr);
}
