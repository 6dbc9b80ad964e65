#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "eoslab/config.hpp"
#include "eoslab/verify.hpp"

namespace eos {

enum ExitCode { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2, kExitDiverged = 3 };

struct CliOptions {
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    bool noPlots = false;
    bool quiet = false;
};

int cmd_run(const std::string& config, const CliOptions& opts, std::ostream& log);
int cmd_sweep(const std::string& config, const CliOptions& opts, std::ostream& log);
int cmd_verify(const std::string& csvPath, const std::string& config, const CliOptions& opts, std::ostream& log);

// EOS_LAB_WORKERS, else hardware concurrency
unsigned default_workers();

struct RunOutcome {
    int exitCode = kExitOk;
    VerificationReport report;
    bool diverged = false;
    std::vector<std::string> notices;
};

// one configured run written to dir: trajectory.csv, diagnostics.csv, report.json, plots
RunOutcome run_to_dir(const ExperimentConfig& cfg, const std::string& dir, bool plots);

}  // namespace eos
