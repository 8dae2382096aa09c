#include "csiloc/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>

namespace {

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Path to the experiment config JSON")
        ->required();
    cmd->add_option("--seed", args.seed, "Override the config seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--out", args.out_dir, "Override the config output directory");
}

csiloc::ExperimentConfig load_with_overrides(const CommonArgs& args) {
    csiloc::ExperimentConfig config = csiloc::load_experiment_config(args.config_path);
    if (args.seed_set) config.seed = args.seed;
    if (!args.out_dir.empty()) config.out_dir = args.out_dir;
    config.validate();
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CSI fingerprint localization toolkit"};
    app.require_subcommand(1);

    CommonArgs args;
    std::function<void(const csiloc::ExperimentConfig&)> action;

    auto bind = [&](const char* name, const char* help,
                    void (*fn)(const csiloc::ExperimentConfig&)) {
        CLI::App* cmd = app.add_subcommand(name, help);
        add_common(cmd, args);
        cmd->callback([&action, fn]() { action = fn; });
    };
    bind("simulate", "Build the fingerprint training set and off-grid test set", csiloc::cmd_simulate);
    bind("crlb", "Sweep the position error bound over SNR and prior sigma", csiloc::cmd_crlb);
    bind("train", "Train the configured network on a simulated training set", csiloc::cmd_train);
    bind("eval", "Localize the test set with the configured methods", csiloc::cmd_eval);
    bind("sweep", "Run the method x spacing x AP-count x augmentation matrix", csiloc::cmd_sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        csiloc::ExperimentConfig config = load_with_overrides(args);
        action(config);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
