#include "eoslab/commands.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "eoslab/plots.hpp"

namespace eos {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << s;
}

int exit_for(const VerificationReport& rep, bool diverged) {
    if (diverged) return kExitDiverged;
    return rep.allPassed() ? kExitOk : kExitCheckFailed;
}

void print_report(std::ostream& log, const VerificationReport& rep) {
    for (const auto& c : rep.checks) {
        log << "  " << to_string(c.status) << "  " << c.name;
        if (c.stepsViolating) log << "  (" << c.stepsViolating << " flagged)";
        if (!c.note.empty()) log << "  [" << c.note << "]";
        log << "\n";
    }
    auto k = [&](const char* name) {
        auto it = rep.constants.find(name);
        return it == rep.constants.end() ? std::string("-") : format_double(it->second);
    };
    log << "  cycles=" << k("cycles") << " epsilon2=" << k("epsilon2") << " BLambda=" << k("BLambda")
        << " anomalyFraction=" << k("anomalyFraction") << " c2Estimate=" << k("c2Estimate") << "\n";
}

ExperimentConfig load_with_overrides(const std::string& path, const CliOptions& opts) {
    ExperimentConfig cfg = load_config(path);
    if (opts.seed) cfg.run.seed = *opts.seed;
    if (opts.noPlots) cfg.emit_plots = false;
    return cfg;
}

}  // namespace

unsigned default_workers() {
    if (const char* env = std::getenv("EOS_LAB_WORKERS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return unsigned(v);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

RunOutcome run_to_dir(const ExperimentConfig& cfg, const std::string& dir, bool plots) {
    fs::create_directories(dir);
    RunResult res = run(cfg.run);
    write_trajectory_csv((fs::path(dir) / "trajectory.csv").string(), res.records);
    write_diagnostics_csv((fs::path(dir) / "diagnostics.csv").string(), res.diag, cfg.run.relaxed_ps_indices.size());
    RunOutcome out;
    out.report = verify(verify_input(res), cfg.verify_checks);
    out.diverged = res.diverged;
    out.notices = res.notices;
    write_text(fs::path(dir) / "report.json", dump_report(out.report));
    if (plots) write_run_plots(dir, res.records, res.eta, res.ds.n());
    out.exitCode = exit_for(out.report, res.diverged);
    return out;
}

int cmd_run(const std::string& config, const CliOptions& opts, std::ostream& log) {
    ExperimentConfig cfg;
    try {
        cfg = load_with_overrides(config, opts);
        validate(cfg.run);
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    std::string dir = opts.out.value_or(cfg.output_dir);
    try {
        RunOutcome o = run_to_dir(cfg, dir, cfg.emit_plots);
        if (!opts.quiet) {
            log << "run " << config << " -> " << dir << "\n";
            for (const auto& n : o.notices) log << "  note: " << n << "\n";
            print_report(log, o.report);
            if (o.diverged) log << "run diverged; partial log written\n";
        }
        return o.exitCode;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        log << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
}

int cmd_sweep(const std::string& config, const CliOptions& opts, std::ostream& log) {
    ExperimentConfig base;
    std::vector<ExperimentConfig> subs;
    try {
        base = load_with_overrides(config, opts);
        if (!base.sweep || base.sweep->param.empty()) throw ConfigError("sweep needs [sweep] param");
        if (base.sweep->values.empty()) throw ConfigError("sweep values are empty");
        for (const auto& v : base.sweep->values) {
            ExperimentConfig c = base;
            c.sweep.reset();
            set_key(c, "", base.sweep->param, v);
            validate(c.run);
            subs.push_back(std::move(c));
        }
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    const std::string dir = opts.out.value_or(base.output_dir);
    fs::create_directories(dir);
    const unsigned workers = std::max(1u, std::min<unsigned>(opts.workers.value_or(default_workers()), subs.size()));

    std::vector<RunOutcome> outcomes(subs.size());
    std::vector<std::string> errors(subs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < subs.size(); i = next++) {
            std::string sub = (fs::path(dir) / (base.sweep->param + "_" + base.sweep->values[i])).string();
            try {
                outcomes[i] = run_to_dir(subs[i], sub, subs[i].emit_plots);
            } catch (const std::exception& e) {
                errors[i] = e.what();
                outcomes[i].exitCode = kExitUsage;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    Json summary;
    summary["param"] = base.sweep->param;
    summary["runs"] = Json::array();
    double maxC2 = 0.0;
    int code = kExitOk;
    for (std::size_t i = 0; i < subs.size(); ++i) {
        const auto& o = outcomes[i];
        Json r;
        r["value"] = base.sweep->values[i];
        r["exit"] = o.exitCode;
        r["diverged"] = o.diverged;
        if (!errors[i].empty()) r["error"] = errors[i];
        for (const char* k : {"c2Estimate", "anomalyFraction", "cycles", "epsilon2", "BLambda", "psRate",
                              "firstCrossingStep", "finalLoss"}) {
            auto it = o.report.constants.find(k);
            double v = it == o.report.constants.end() ? std::nan("") : it->second;
            r[k] = std::isfinite(v) ? Json(v) : Json(nullptr);
            if (std::string(k) == "c2Estimate" && std::isfinite(v)) maxC2 = std::max(maxC2, v);
        }
        if (const auto* ma = o.report.find("ma_smallness")) {
            auto it = ma->measured.find("max_ratio");
            if (it != ma->measured.end()) r["maLambdaRatio"] = it->second;
        }
        summary["runs"].push_back(r);
        if (o.exitCode == kExitUsage) code = kExitUsage;
        else if (o.exitCode == kExitCheckFailed && code != kExitUsage) code = kExitCheckFailed;
        else if (o.exitCode == kExitDiverged && code == kExitOk) code = kExitDiverged;
        if (!opts.quiet) {
            log << base.sweep->param << "=" << base.sweep->values[i] << " exit " << o.exitCode;
            if (!errors[i].empty()) log << " error: " << errors[i];
            log << "\n";
            print_report(log, o.report);
        }
    }
    summary["max_c2Estimate"] = maxC2;
    write_text(fs::path(dir) / "summary.json", summary.dump(2) + "\n");
    return code;
}

int cmd_verify(const std::string& csvPath, const std::string& config, const CliOptions& opts, std::ostream& log) {
    ExperimentConfig cfg;
    try {
        cfg = load_with_overrides(config, opts);
        validate(cfg.run);
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
    std::vector<TrajectoryRecord> recs;
    std::vector<Diagnostics> diag;
    try {
        recs = read_trajectory_csv(csvPath);
        fs::path side = fs::path(csvPath).parent_path() / "diagnostics.csv";
        if (fs::exists(side)) diag = read_diagnostics_csv(side.string());
        else log << "note: no diagnostics.csv next to the log; diagnostics-based checks skipped\n";
    } catch (const SchemaError& e) {
        log << "schema error: " << e.what() << "\n";
        return kExitUsage;
    }
    if (recs.empty()) {
        log << "schema error: " << csvPath << " has no data rows\n";
        return kExitUsage;
    }
    try {
        VerificationReport rep = verify(verify_input(cfg.run, std::move(recs), std::move(diag)), cfg.verify_checks);
        fs::path dir = opts.out ? fs::path(*opts.out) : fs::path(csvPath).parent_path();
        if (dir.empty()) dir = ".";
        fs::create_directories(dir);
        write_text(dir / "report.json", dump_report(rep));
        if (!opts.quiet) {
            log << "verify " << csvPath << "\n";
            print_report(log, rep);
        }
        return exit_for(rep, rep.constants.at("diverged") != 0.0);
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace eos
