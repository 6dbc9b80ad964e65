// end-to-end acceptance: one PASS/FAIL line per criterion
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "eoslab/commands.hpp"

using namespace eos;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& what, bool ok, const std::string& detail, double secs) {
    std::printf("[%s] %2d %-34s %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str(), secs);
    std::fflush(stdout);
    if (!ok) ++failures;
}

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

double measured(const VerificationReport& r, const std::string& check, const std::string& key) {
    const auto* c = r.find(check);
    if (!c) return std::nan("");
    auto it = c->measured.find(key);
    return it == c->measured.end() ? std::nan("") : it->second;
}

double constant(const VerificationReport& r, const std::string& key) {
    auto it = r.constants.find(key);
    return it == r.constants.end() ? std::nan("") : it->second;
}

using Clock = std::chrono::steady_clock;

void init_sharpness() {
    auto t0 = Clock::now();
    double worst = 0.0;
    struct Case {
        std::size_t n, d, rank, m;
        double top, ratio;
        std::uint64_t seed;
    };
    for (const Case& c : {Case{200, 50, 50, 400, 40, 1.15, 1}, Case{40, 10, 10, 40, 12, 1.3, 3},
                          Case{100, 20, 20, 160, 20, 1.4, 1}, Case{60, 30, 25, 80, 9, 1.05, 8},
                          Case{30, 64, 30, 200, 50, 1.2, 4}}) {
        auto ds = gen_spectrum_dataset(c.n, c.d, shaped_spectrum(c.rank, c.top, 3, c.ratio),
                                       LabelMode::floor(0.1), c.seed);
        auto s = evaluate(init_symmetric(c.m, c.d, c.seed + 10), ds);
        double got = sym_eigvals(reduce_core(ds, core_M(s, ds.n()))).front();
        double want = 2.0 * ds.lambdas.front() * double(c.d + 1) / (double(c.n) * double(c.d));
        worst = std::max(worst, std::fabs(got - want) / got);
    }
    double secs = since(t0);
    report(1, "initial sharpness formula", worst <= 1e-8 && secs < 1.0, fmt("max rel err %.2e over 5 datasets", worst),
           secs);
}

void identities() {
    auto t0 = Clock::now();
    auto cfg = load_config("linear_eos").run;
    cfg.steps = 500;
    cfg.dfpos_trials = 10;
    auto res = run(cfg);
    double r1 = 0, r2 = 0, r3 = 0;
    for (const auto& d : res.diag) {
        r1 = std::max(r1, d.resResidual);
        r2 = std::max(r2, d.resGram);
        r3 = std::max(r3, d.resKey);
    }
    bool crossed = std::any_of(res.records.begin(), res.records.end(),
                               [](const TrajectoryRecord& r) { return r.lambda1 >= r.twoOverEta; });
    double secs = since(t0);
    char buf[160];
    std::snprintf(buf, sizeof buf, "residual %.1e gram %.1e key %.1e over %zu steps%s", r1, r2, r3, res.diag.size(),
                  crossed ? ", crosses 2/eta" : ", never crosses 2/eta");
    bool ok = !res.diverged && res.diag.size() == 500 && crossed && std::max({r1, r2, r3}) <= 1e-8 && secs < 120;
    report(2, "exact identity suite", ok, buf, secs);
}

void grad_checks() {
    auto t0 = Clock::now();
    auto tc = load_config("tanh5").run;
    auto tds = build_dataset(tc);
    double tanhErr = grad_check(build_mlp(tc, tds), tds, 1e-3, 400);
    auto lc = load_config("linear_eos").run;
    lc.model = ModelKind::Mlp;
    lc.hidden = {lc.width};
    lc.activation = Activation::Linear;
    auto lds = build_dataset(lc);
    double linErr = grad_check(build_mlp(lc, lds), lds, 1e-3, 400);
    double secs = since(t0);
    char buf[128];
    std::snprintf(buf, sizeof buf, "tanh5 %.2e, linear %.2e (400 coords each)", tanhErr, linErr);
    report(3, "mlp gradient check", tanhErr <= 1e-6 && linErr <= 1e-6 && secs < 30, buf, secs);
}

void gram_duality() {
    auto t0 = Clock::now();
    auto tc = load_config("tanh5").run;
    auto tds = build_dataset(tc);
    auto net = build_mlp(tc, tds);
    auto g = gram_split(net, tds.X);
    double splitErr = 0.0;
    for (std::size_t i = 0; i < g.M.a.size(); ++i)
        splitErr = std::max(splitErr, std::fabs(g.M.a[i] - g.M_A.a[i] - g.M_W.a[i]));

    double dualErr = 0.0;
    std::size_t nets = 0;
    for (auto act : {Activation::Tanh, Activation::Linear, Activation::Relu, Activation::Elu}) {
        auto ds = gen_spectrum_dataset(12, 6, shaped_spectrum(6, 12, 3, 1.2), LabelMode::random_sign(), 5);
        auto small = init_mlp({6, 10, 8, 1}, act, 7);  // p = 60 + 80 + 8 = 148
        if (small.param_count() > 200) continue;
        ++nets;
        Matrix J = jacobian(small, ds.X);
        Matrix a = matmul_nt(J, J), b = matmul_tn(J, J);
        for (auto& v : a.a) v *= 2.0 / 12.0;
        for (auto& v : b.a) v *= 2.0 / 12.0;
        Vec ea = sym_eigvals(a), eb = sym_eigvals(b);
        for (std::size_t i = 0; i < ea.size(); ++i)
            if (ea[i] > 1e-10 * ea[0]) dualErr = std::max(dualErr, std::fabs(ea[i] - eb[i]) / ea[i]);
    }
    double secs = since(t0);
    char buf[128];
    std::snprintf(buf, sizeof buf, "split %.1e abs on tanh5, duality %.1e rel on %zu nets", splitErr, dualErr, nets);
    report(4, "gram split and duality", splitErr <= 1e-12 && dualErr <= 1e-8 && nets == 4 && secs < 30, buf, secs);
}

struct EosRun {
    RunResult res;
    VerificationReport rep;
    double secs = 0;
};

void eos_reproduction(const EosRun& e) {
    const auto& recs = e.res.records;
    const double firstCross = constant(e.rep, "firstCrossingStep");
    bool crossed = std::isfinite(firstCross);
    std::size_t drops = 0;
    for (std::size_t t = 1; t < recs.size() && (!crossed || double(t) < firstCross); ++t)
        if (phase_at(e.rep.segments, t) == Phase::I && recs[t].lambda1 < recs[t - 1].lambda1) ++drops;
    double cycles = constant(e.rep, "cycles");
    double l0 = recs.front().loss, lT = recs.back().loss;
    std::size_t rises = 0;
    for (std::size_t t = 1; t < recs.size(); ++t)
        if (recs[t].loss > recs[t - 1].loss) ++rises;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "(a) %zu phase-I drops before crossing (b) first crossing t=%.0f (c) %.0f cycles (d) loss %.3g -> "
                  "%.3g, %zu increases",
                  drops, firstCross, cycles, l0, lT, rises);
    bool ok = !e.res.diverged && drops == 0 && crossed && cycles >= 3 && lT <= 0.1 * l0 && rises >= 1 && e.secs < 120;
    report(5, "edge-of-stability reproduction", ok, buf, e.secs);
}

void outlier_and_r(const EosRun& e) {
    auto t0 = Clock::now();
    const auto* outl = e.rep.find("outlier");
    const auto* rt = e.rep.find("r_tracking");
    double maxL2 = measured(e.rep, "outlier", "max_lambda2_eta");
    double monoBad = measured(e.rep, "r_tracking", "rprime_increases");
    double diffBad = measured(e.rep, "r_tracking", "rdiff_violations");
    double maxDiff = measured(e.rep, "r_tracking", "max_rdiff_norm");
    double bound = rt && rt->threshold.count("rdiff_bound") ? rt->threshold.at("rdiff_bound") : std::nan("");
    double orth = measured(e.rep, "orth_decomposition", "max_rel_error");
    char buf[220];
    std::snprintf(buf, sizeof buf,
                  "max lambda2*eta %.3f; R' increases %.0f; |R-R'| max %.3g vs bound %.3g (%.0f over); orth %.1e; "
                  "r_tracking %s",
                  maxL2, monoBad, maxDiff, bound, diffBad, orth, rt ? to_string(rt->status).c_str() : "missing");
    bool ok = outl && outl->status == Status::Pass && monoBad == 0 && diffBad == 0 && orth <= 1e-9;
    report(6, "outlier and R decomposition", ok, buf, since(t0));
}

void coupling(const EosRun& e) {
    auto t0 = Clock::now();
    double frac = constant(e.rep, "anomalyFraction");
    auto cfg = load_config("tanh5").run;
    cfg.dfpos_trials = 10;
    auto res = run(cfg);
    auto rep = verify(verify_input(res), {"ma_smallness"});
    double ratio = measured(rep, "ma_smallness", "max_ratio");
    char buf[160];
    std::snprintf(buf, sizeof buf, "anomaly fraction %.4f on linear_eos; max lambda(M_A)/Lambda %.4f on tanh5 (%zu steps)",
                  frac, ratio, res.records.size());
    report(7, "coupling statistics", !res.diverged && frac < 0.1 && ratio < 0.05, buf, since(t0));
}

void width_sweep() {
    auto t0 = Clock::now();
    auto base = load_config("width_sweep");
    double lo = INFINITY, hi = 0;
    std::string per;
    bool diverged = false;
    for (const auto& v : base.sweep->values) {
        auto c = base;
        set_key(c, "", base.sweep->param, v);
        c.run.dfpos_trials = 10;
        auto res = run(c.run);
        diverged = diverged || res.diverged;
        double c2 = constant(verify(verify_input(res), {"twolayer_theory"}), "c2Estimate");
        lo = std::min(lo, c2);
        hi = std::max(hi, c2);
        per += (per.empty() ? "" : ", ") + v + ":" + fmt("%.2f", c2);
    }
    double secs = since(t0);
    char buf[200];
    std::snprintf(buf, sizeof buf, "max |Gamma| m = {%s}; constant %.2f, max/min %.2f", per.c_str(), hi, hi / lo);
    report(8, "width sweep c2 bound", !diverged && hi / lo <= 2.5 && secs < 300, buf, secs);
}

void properties(const EosRun& e) {
    auto t0 = Clock::now();
    auto df = check_dfpos_property(10000, 1);
    auto ct = check_contraction_property(1000, 1);
    const auto* ns = e.rep.find("null_space");
    double nullMax = measured(e.rep, "null_space", "max_null_fraction");
    char buf[200];
    std::snprintf(buf, sizeof buf, "dfpos %zu/10000 violations; contraction max excess %.1e; null space %s (max %.1e, rank %zu < n %zu)",
                  df.stepsViolating, ct.measured["max_excess"], ns ? to_string(ns->status).c_str() : "missing", nullMax,
                  e.res.ds.r(), e.res.ds.n());
    bool ok = df.status == Status::Pass && ct.stepsViolating == 0 && ct.measured["max_excess"] <= 1e-10 && ns &&
              ns->status == Status::Pass && e.res.ds.r() < e.res.ds.n();
    report(9, "training-independent properties", ok, buf, since(t0));
}

void determinism() {
    auto t0 = Clock::now();
    auto dir = fs::temp_directory_path() / "eoslab_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto cfg = (dir / "det.cfg").string();
    std::ofstream(cfg) << "preset = linear_eos\nsteps = 600\n";
    std::ostringstream log;
    CliOptions o;
    o.quiet = true;
    o.noPlots = true;
    o.out = (dir / "a").string();
    int ca = cmd_run(cfg, o, log);
    o.out = (dir / "b").string();
    int cb = cmd_run(cfg, o, log);
    bool traj = slurp(dir / "a" / "trajectory.csv") == slurp(dir / "b" / "trajectory.csv");
    bool rep = slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json");
    bool nonEmpty = !slurp(dir / "a" / "trajectory.csv").empty() && !slurp(dir / "a" / "report.json").empty();
    char buf[160];
    std::snprintf(buf, sizeof buf, "trajectory.csv %s, report.json %s, exit %d/%d", traj ? "identical" : "DIFFER",
                  rep ? "identical" : "DIFFER", ca, cb);
    report(10, "determinism", traj && rep && nonEmpty && ca == cb, buf, since(t0));
    fs::remove_all(dir);
}

}  // namespace

int main() {
    init_sharpness();
    identities();
    grad_checks();
    gram_duality();

    EosRun eos;
    {
        auto t0 = Clock::now();
        auto cfg = load_config("linear_eos").run;
        eos.res = run(cfg);
        eos.rep = verify(verify_input(eos.res));
        eos.secs = since(t0);
    }
    eos_reproduction(eos);
    outlier_and_r(eos);
    coupling(eos);
    width_sweep();
    properties(eos);
    determinism();

    std::printf("%d of 10 criteria failed\n", failures);
    return failures ? 1 : 0;
}
