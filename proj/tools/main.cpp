#include <iostream>

#include "CLI11.hpp"
#include "eoslab/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"eoslab: gradient descent at the edge of stability"};
    app.require_subcommand(1);
    app.fallthrough();

    eos::CliOptions opts;
    std::string out;
    std::uint64_t seed = 0;
    unsigned workers = 0;
    auto* outOpt = app.add_option("--out", out, "output directory");
    auto* seedOpt = app.add_option("--seed", seed, "override the run seed");
    auto* workersOpt = app.add_option("--workers", workers, "parallel sweep runs")->check(CLI::PositiveNumber);
    app.add_flag("--no-plots", opts.noPlots, "skip SVG output");
    app.add_flag("-q,--quiet", opts.quiet, "only report errors");

    std::string config, csv;
    auto* run = app.add_subcommand("run", "train one configuration and verify it");
    run->add_option("config", config, "config file or preset name")->required();
    auto* sweep = app.add_subcommand("sweep", "run every value of the [sweep] axis");
    sweep->add_option("config", config, "config file or preset name")->required();
    auto* verify = app.add_subcommand("verify", "re-check an existing trajectory log");
    verify->add_option("csv", csv, "trajectory.csv")->required();
    verify->add_option("config", config, "config the log was produced with")->required();
    auto* presets = app.add_subcommand("presets", "list bundled presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return eos::kExitUsage;
    }
    if (*outOpt) opts.out = out;
    if (*seedOpt) opts.seed = seed;
    if (*workersOpt) opts.workers = workers;

    if (*run) return eos::cmd_run(config, opts, std::cout);
    if (*sweep) return eos::cmd_sweep(config, opts, std::cout);
    if (*verify) return eos::cmd_verify(csv, config, opts, std::cout);
    if (*presets) {
        for (const auto& p : eos::preset_names()) std::cout << p << "\n";
        return 0;
    }
    return eos::kExitUsage;
}
