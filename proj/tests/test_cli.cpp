#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eoslab/commands.hpp"

using namespace eos;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(# small two-layer run
model = twolayer
width = 40
eta_fraction = 0.8
steps = 120
seed = 3
v1_source = gram
dfpos_trials = 100

[data]
n = 40
d = 10
rank = 10
top = 12
gap = 3
ratio = 1.3
labels = projection_floor
kappa = 0.14
)";

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("eoslab_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string write_cfg(const fs::path& dir, const std::string& text) {
    auto p = dir / "run.cfg";
    std::ofstream(p) << text;
    return p.string();
}

// replaces a top-level "key = value" line of the small config
std::string small_with(const std::string& key, const std::string& value) {
    std::string text = kSmall;
    auto at = text.find("\n" + key + " = ") + 1;
    auto end = text.find('\n', at);
    return text.substr(0, at) + key + " = " + value + text.substr(end);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

CliOptions quiet_to(const fs::path& out, bool plots = false) {
    CliOptions o;
    o.out = out.string();
    o.quiet = true;
    o.noPlots = !plots;
    return o;
}

}  // namespace

TEST(Cli, ParsesSectionsAndComments) {
    auto c = parse_config(kSmall);
    EXPECT_EQ(c.run.model, ModelKind::TwoLayer);
    EXPECT_EQ(c.run.width, 40u);
    EXPECT_EQ(c.run.steps, 120u);
    EXPECT_EQ(c.run.data.n, 40u);
    EXPECT_EQ(c.run.data.kappa, 0.14);
    EXPECT_EQ(c.run.v1(), V1Source::Gram);
    EXPECT_FALSE(c.sweep.has_value());
}

TEST(Cli, RejectsBadConfigText) {
    EXPECT_THROW(parse_config("[data]\nsteps = 3\n"), ConfigError);
    EXPECT_THROW(parse_config("widht = 3\n"), ConfigError);
    EXPECT_THROW(parse_config("width = abc\n"), ConfigError);
    EXPECT_THROW(parse_config("[nowhere]\nx = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("no equals sign\n"), ConfigError);
    EXPECT_THROW(parse_config("model = cnn\n"), ConfigError);
}

TEST(Cli, PresetsLoad) {
    auto names = preset_names();
    for (const char* want : {"linear_eos", "linear_ps_only", "tanh5", "gaussian_labels", "width_sweep",
                             "largeinit_ntk", "freeze_sweep"}) {
        ASSERT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
        auto c = load_config(want);
        EXPECT_NO_THROW(validate(c.run)) << want;
    }
    auto eosCfg = load_config("linear_eos");
    EXPECT_EQ(eosCfg.run.data.n, 200u);
    EXPECT_EQ(eosCfg.run.data.d, 50u);
    EXPECT_EQ(eosCfg.run.width, 400u);
    EXPECT_EQ(eosCfg.run.eta_fraction, 0.8);
    EXPECT_TRUE(load_config("width_sweep").sweep.has_value());
    EXPECT_THROW(load_config("no_such_preset"), ConfigError);
}

TEST(Cli, PresetThenOverride) {
    auto c = parse_config("preset = linear_eos\nsteps = 7\n[data]\nn = 120\n");
    EXPECT_EQ(c.run.steps, 7u);
    EXPECT_EQ(c.run.data.n, 120u);
    EXPECT_EQ(c.run.width, 400u);
}

TEST(Cli, StepsZeroIsUsageError) {
    auto dir = scratch("zero");
    auto cfg = write_cfg(dir, small_with("steps", "0"));
    std::ostringstream log;
    EXPECT_EQ(cmd_run(cfg, quiet_to(dir / "out"), log), kExitUsage);
    EXPECT_NE(log.str().find("steps"), std::string::npos);
}

TEST(Cli, EmptySweepIsUsageError) {
    auto dir = scratch("emptysweep");
    auto cfg = write_cfg(dir, std::string(kSmall) + "[sweep]\nparam = width\nvalues =\n");
    std::ostringstream log;
    EXPECT_EQ(cmd_sweep(cfg, quiet_to(dir / "out"), log), kExitUsage);
    auto nosweep = write_cfg(dir, kSmall);
    EXPECT_EQ(cmd_sweep(nosweep, quiet_to(dir / "out"), log), kExitUsage);
}

TEST(Cli, RunWritesLogsReportAndPlots) {
    auto dir = scratch("run");
    auto cfg = write_cfg(dir, kSmall);
    std::ostringstream log;
    int code = cmd_run(cfg, quiet_to(dir / "out", true), log);
    EXPECT_TRUE(code == kExitOk || code == kExitCheckFailed) << code;
    for (const char* f : {"trajectory.csv", "report.json", "diagnostics.csv", "sharpness_loss.svg",
                          "anorm_sharpness.svg", "r_decomposition.svg"})
        EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
    EXPECT_EQ(slurp(dir / "out" / "sharpness_loss.svg").rfind("<svg", 0), 0u);
    auto rep = report_from_json(Json::parse(slurp(dir / "out" / "report.json")));
    EXPECT_EQ(code == kExitOk, rep.allPassed());
}

TEST(Cli, RerunIsByteIdentical) {
    auto dir = scratch("det");
    auto cfg = write_cfg(dir, kSmall);
    std::ostringstream log;
    cmd_run(cfg, quiet_to(dir / "a"), log);
    cmd_run(cfg, quiet_to(dir / "b"), log);
    EXPECT_EQ(slurp(dir / "a" / "trajectory.csv"), slurp(dir / "b" / "trajectory.csv"));
    EXPECT_EQ(slurp(dir / "a" / "report.json"), slurp(dir / "b" / "report.json"));
    auto other = quiet_to(dir / "c");
    other.seed = 9;
    cmd_run(cfg, other, log);
    EXPECT_NE(slurp(dir / "a" / "trajectory.csv"), slurp(dir / "c" / "trajectory.csv"));
}

TEST(Cli, VerifyReproducesRunReport) {
    auto dir = scratch("verify");
    auto cfg = write_cfg(dir, kSmall);
    std::ostringstream log;
    int runCode = cmd_run(cfg, quiet_to(dir / "out"), log);
    auto first = slurp(dir / "out" / "report.json");
    int verCode = cmd_verify((dir / "out" / "trajectory.csv").string(), cfg, quiet_to(dir / "again"), log);
    EXPECT_EQ(verCode, runCode);
    EXPECT_EQ(slurp(dir / "again" / "report.json"), first);
}

TEST(Cli, VerifyTruncatedCsv) {
    auto dir = scratch("trunc");
    auto cfg = write_cfg(dir, kSmall);
    std::ostringstream log;
    cmd_run(cfg, quiet_to(dir / "out"), log);
    auto text = slurp(dir / "out" / "trajectory.csv");
    std::ofstream(dir / "out" / "trajectory.csv") << text.substr(0, text.size() / 2 + 7);
    EXPECT_EQ(cmd_verify((dir / "out" / "trajectory.csv").string(), cfg, quiet_to(dir / "v"), log), kExitUsage);
    std::ofstream(dir / "bad.csv") << "t,loss,lambda1\n0,1,1\n";
    std::ostringstream named;
    EXPECT_EQ(cmd_verify((dir / "bad.csv").string(), cfg, quiet_to(dir / "v"), named), kExitUsage);
    EXPECT_NE(named.str().find("lambda2"), std::string::npos);
}

TEST(Cli, InjectedOutlierViolationFails) {
    auto dir = scratch("inject");
    auto cfg = write_cfg(dir, kSmall);
    std::ostringstream log;
    cmd_run(cfg, quiet_to(dir / "out"), log);
    auto recs = read_trajectory_csv((dir / "out" / "trajectory.csv").string());
    recs[10].lambda2 = 1.2 * recs[10].twoOverEta / 2.0;
    write_trajectory_csv((dir / "out" / "trajectory.csv").string(), recs);
    EXPECT_EQ(cmd_verify((dir / "out" / "trajectory.csv").string(), cfg, quiet_to(dir / "v"), log), kExitCheckFailed);
    auto rep = report_from_json(Json::parse(slurp(dir / "v" / "report.json")));
    EXPECT_EQ(rep.find("outlier")->status, Status::Fail);
    EXPECT_EQ(rep.find("outlier")->steps, (std::vector<std::size_t>{10}));
}

TEST(Cli, DivergenceExitsThree) {
    auto dir = scratch("div");
    auto cfg = write_cfg(dir, small_with("eta_fraction", "3"));
    std::ostringstream log;
    EXPECT_EQ(cmd_run(cfg, quiet_to(dir / "out"), log), kExitDiverged);
    EXPECT_TRUE(fs::exists(dir / "out" / "trajectory.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "report.json"));
}

TEST(Cli, SweepWritesSubdirsAndSummary) {
    auto dir = scratch("sweep");
    auto cfg = write_cfg(dir, small_with("steps", "40") + "[sweep]\nparam = width\nvalues = 40, 80\n");
    std::ostringstream log;
    auto opts = quiet_to(dir / "out");
    opts.workers = 2;
    int code = cmd_sweep(cfg, opts, log);
    EXPECT_NE(code, kExitUsage);
    EXPECT_TRUE(fs::exists(dir / "out" / "width_40" / "trajectory.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "width_80" / "report.json"));
    auto summary = Json::parse(slurp(dir / "out" / "summary.json"));
    ASSERT_EQ(summary["runs"].size(), 2u);
    EXPECT_EQ(summary["runs"][1]["value"], "80");
    EXPECT_TRUE(summary["runs"][0]["c2Estimate"].is_number());
}

TEST(Cli, WorkersFromEnvironment) {
    setenv("EOS_LAB_WORKERS", "3", 1);
    EXPECT_EQ(default_workers(), 3u);
    setenv("EOS_LAB_WORKERS", "zero", 1);
    EXPECT_GE(default_workers(), 1u);
    unsetenv("EOS_LAB_WORKERS");
}
