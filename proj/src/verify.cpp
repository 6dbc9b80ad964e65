#include "eoslab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace eos {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kIdentityTol = 1e-8;
constexpr double kAnormTol = 1e-10;
constexpr double kNullTol = 1e-8;
constexpr double kNullFloor = 1e-12;     // times |Y|, label roundoff
constexpr double kConvergedFloor = 1e-6;  // |D| below this times |Y| counts as converged
constexpr double kOrthTol = 1e-9;
constexpr double kMonoTol = 1e-12;

bool same_double(double a, double b) {
    if (std::isnan(a) && std::isnan(b)) return true;
    return a == b;
}

bool same_map(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    if (a.size() != b.size()) return false;
    for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib)
        if (ia->first != ib->first || !same_double(ia->second, ib->second)) return false;
    return true;
}

Json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double unnum(const Json& j) {
    if (j.is_number()) return j.get<double>();
    std::string s = j.get<std::string>();
    if (s == "nan") return kNaN;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::runtime_error("report: bad number '" + s + "'");
}

Json map_json(const std::map<std::string, double>& m) {
    Json j = Json::object();
    for (const auto& [k, v] : m) j[k] = num(v);
    return j;
}

std::map<std::string, double> json_map(const Json& j) {
    std::map<std::string, double> m;
    for (auto it = j.begin(); it != j.end(); ++it) m[it.key()] = unnum(it.value());
    return m;
}

CheckEntry make(const std::string& name, const std::string& anchor, Status st) {
    CheckEntry e;
    e.name = name;
    e.anchor = anchor;
    e.status = st;
    return e;
}

CheckEntry skipped(const std::string& name, const std::string& anchor, const std::string& why) {
    CheckEntry e = make(name, anchor, Status::Skipped);
    e.note = why;
    return e;
}

double dnorm(const TrajectoryRecord& r, std::size_t n) { return std::sqrt(std::max(0.0, r.loss * double(n))); }

// records before a divergence row
std::vector<TrajectoryRecord> finite_prefix(const std::vector<TrajectoryRecord>& recs) {
    std::vector<TrajectoryRecord> out;
    for (const auto& r : recs) {
        if (!std::isfinite(r.lambda1) || !std::isfinite(r.loss)) break;
        out.push_back(r);
    }
    return out;
}

std::vector<Phase> phase_per_record(const std::vector<PhaseSegment>& segs, std::size_t count) {
    std::vector<Phase> ph(count, Phase::I);
    for (const auto& s : segs)
        for (std::size_t i = s.start; i <= s.end && i < count; ++i) ph[i] = s.phase;
    return ph;
}

const char* kOutlierAnchor = "outlier assumption: lambda2 stays below 1/eta";
const char* kCouplingAnchor = "sharpness and output-norm move in the same direction";
const char* kPsSignAnchor = "progressive sharpening needs D^T F < 0";
const char* kGrowthAnchor = "geometric growth of |D^T v1| above 2/eta";
const char* kDfposAnchor = "||D|| > ||Y|| implies D^T F > 0";
const char* kContractionAnchor = "contraction of I - eta M below 2/eta";
const char* kAdropAnchor = "output-norm drop when ||D|| > ||Y||";
const char* kRtrackAnchor = "R tracks the deflated sequence R'";
const char* kRelaxedAnchor = "relaxed progressive-sharpening condition";
const char* kTheoryAnchor = "two-layer sharpening and return below 2/eta";
const char* kNullAnchor = "residual stays in the column space of X^T X";
const char* kInterpAnchor = "Gram update as interpolation of two rank-one terms";
const char* kOrthAnchor = "orthogonal split of D along v1";
const char* kFirstOrderAnchor = "first-order approximation of the residual update";
const char* kMaAnchor = "output-layer Gram part is negligible";

}  // namespace

std::string to_string(Status s) {
    switch (s) {
        case Status::Pass: return "pass";
        case Status::Fail: return "fail";
        case Status::ReportOnly: return "report-only";
        case Status::Skipped: return "skipped";
    }
    return "?";
}

Status parse_status(const std::string& s) {
    if (s == "pass") return Status::Pass;
    if (s == "fail") return Status::Fail;
    if (s == "report-only") return Status::ReportOnly;
    if (s == "skipped") return Status::Skipped;
    throw std::runtime_error("unknown status '" + s + "'");
}

bool CheckEntry::operator==(const CheckEntry& o) const {
    return name == o.name && anchor == o.anchor && status == o.status && same_map(measured, o.measured) &&
           same_map(threshold, o.threshold) && stepsViolating == o.stepsViolating && steps == o.steps &&
           note == o.note;
}

bool VerificationReport::allPassed() const {
    for (const auto& c : checks)
        if (c.status == Status::Fail) return false;
    return true;
}

const CheckEntry* VerificationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

bool VerificationReport::operator==(const VerificationReport& o) const {
    return runConfig == o.runConfig && checks == o.checks && same_map(constants, o.constants) &&
           segments == o.segments;
}

Json to_json(const VerificationReport& r) {
    Json j;
    j["run_config"] = r.runConfig;
    j["checks"] = Json::array();
    for (const auto& c : r.checks) {
        Json e;
        e["name"] = c.name;
        e["paper_anchor"] = c.anchor;
        e["status"] = to_string(c.status);
        e["measured"] = map_json(c.measured);
        e["threshold"] = map_json(c.threshold);
        e["steps_violating"] = c.stepsViolating;
        e["steps"] = c.steps;
        e["note"] = c.note;
        j["checks"].push_back(e);
    }
    j["constants"] = map_json(r.constants);
    j["segments"] = Json::array();
    for (const auto& s : r.segments)
        j["segments"].push_back({{"phase", to_string(s.phase)}, {"start", s.start}, {"end", s.end}});
    return j;
}

VerificationReport report_from_json(const Json& j) {
    VerificationReport r;
    r.runConfig = j.at("run_config");
    for (const auto& e : j.at("checks")) {
        CheckEntry c;
        c.name = e.at("name").get<std::string>();
        c.anchor = e.at("paper_anchor").get<std::string>();
        c.status = parse_status(e.at("status").get<std::string>());
        c.measured = json_map(e.at("measured"));
        c.threshold = json_map(e.at("threshold"));
        c.stepsViolating = e.at("steps_violating").get<std::size_t>();
        c.steps = e.at("steps").get<std::vector<std::size_t>>();
        c.note = e.at("note").get<std::string>();
        r.checks.push_back(std::move(c));
    }
    r.constants = json_map(j.at("constants"));
    for (const auto& s : j.at("segments")) {
        PhaseSegment seg;
        std::string p = s.at("phase").get<std::string>();
        if (p == "I") seg.phase = Phase::I;
        else if (p == "II") seg.phase = Phase::II;
        else if (p == "III") seg.phase = Phase::III;
        else if (p == "IV") seg.phase = Phase::IV;
        else throw std::runtime_error("report: unknown phase '" + p + "'");
        seg.start = s.at("start").get<std::size_t>();
        seg.end = s.at("end").get<std::size_t>();
        r.segments.push_back(seg);
    }
    return r;
}

std::string dump_report(const VerificationReport& r) { return to_json(r).dump(2) + "\n"; }

Json config_to_json(const RunConfig& c) {
    Json j;
    j["model"] = c.model == ModelKind::TwoLayer ? "twolayer" : "mlp";
    j["width"] = c.width;
    j["w_scale"] = num(c.w_scale);
    j["hidden"] = c.hidden;
    j["activation"] = to_string(c.activation);
    j["init_scale"] = num(c.init_scale);
    j["eta"] = num(c.eta);
    j["eta_fraction"] = num(c.eta_fraction);
    j["steps"] = c.steps;
    j["seed"] = c.seed;
    j["freeze_depth"] = c.freeze_depth;
    j["measure_every"] = c.measure_every;
    j["v1_source"] = c.v1() == V1Source::Gram ? "gram" : "data_x";
    j["relaxed_ps_indices"] = c.relaxed_ps_indices;
    j["relaxed_ps_steps"] = c.relaxed_ps_steps;
    j["smooth_window"] = c.smooth_window;
    j["min_len"] = c.min_len;
    j["growth_c"] = num(c.growth_c);
    j["dfpos_trials"] = c.dfpos_trials;
    const auto& d = c.data;
    Json dj;
    dj["source"] = d.source;
    if (d.source == "csv") {
        dj["csv_path"] = d.csv_path;
        dj["csv_header"] = d.csv_header;
    } else {
        dj["n"] = d.n;
        dj["d"] = d.d;
        if (d.spectrum.empty()) {
            dj["rank"] = d.rank;
            dj["top"] = num(d.top);
            dj["gap"] = num(d.gap);
            dj["ratio"] = num(d.ratio);
        } else {
            Json sp = Json::array();
            for (double v : d.spectrum) sp.push_back(num(v));
            dj["spectrum"] = sp;
        }
        dj["labels"] = d.labels;
        if (d.labels == "align_eigvec") dj["align_index"] = d.align_index;
        if (d.labels == "projection_floor") {
            dj["kappa"] = num(d.kappa);
            dj["sign_labels"] = d.sign_labels;
        }
    }
    dj["mean_subtract"] = d.mean_subtract;
    dj["seed"] = d.seed.value_or(c.seed);
    j["data"] = dj;
    return j;
}

// ---- inputs

namespace {

void fill_data_facts(VerifyInput& in, const Dataset& ds) {
    in.n = ds.n();
    in.ynorm = norm(ds.Y);
    in.signedLabels = ds.labelKind == LabelKind::Signed;
    in.rank = ds.r();
    in.data = spectrum_stats(ds);
    if (ds.r() > 0) {
        Vec proj = matvec(ds.V, matvec_t(ds.V, ds.Y));
        in.yInColumnSpace = norm(lincomb(1.0, ds.Y, -1.0, proj)) <= 1e-10 * std::max(in.ynorm, 1e-300);
    }
}

}  // namespace

VerifyInput verify_input(const RunResult& res) {
    VerifyInput in;
    in.cfg = res.cfg;
    in.eta = res.eta;
    in.m = res.cfg.model == ModelKind::TwoLayer ? res.cfg.width : 0;
    fill_data_facts(in, res.ds);
    in.records = res.records;
    in.diag = res.diag;
    in.diverged = res.diverged;
    return in;
}

VerifyInput verify_input(const RunConfig& cfg, std::vector<TrajectoryRecord> records, std::vector<Diagnostics> diag) {
    VerifyInput in;
    in.cfg = cfg;
    Dataset ds = build_dataset(cfg);
    in.eta = resolve_eta(cfg, ds);
    in.m = cfg.model == ModelKind::TwoLayer ? cfg.width : 0;
    fill_data_facts(in, ds);
    for (const auto& r : records)
        if (!std::isfinite(r.lambda1) || !std::isfinite(r.loss) || r.loss > 1e12) in.diverged = true;
    in.records = std::move(records);
    in.diag = std::move(diag);
    return in;
}

DerivedConstants derived_constants(const VerifyInput& in) {
    DerivedConstants k;
    auto recs = finite_prefix(in.records);
    std::vector<double> drift;
    std::vector<bool> deg;
    for (const auto& r : recs) {
        k.BLambda = std::max(k.BLambda, in.eta * r.lambda1);
        k.BD = std::max(k.BD, dnorm(r, in.n));
        drift.push_back(r.v1drift);
        deg.push_back(r.lambda1 - r.lambda2 < kDegenerateGap * std::fabs(r.lambda1));
    }
    k.epsilon2 = recs.empty() ? 0.0 : epsilon2_estimate(drift, deg, 0, recs.size() - 1);
    k.lambdaR = kNaN;
    for (std::size_t i = 0; i < in.diag.size() && i < recs.size(); ++i) {
        double v = in.diag[i].lambdaMinCol;
        if (std::isfinite(v) && (std::isnan(k.lambdaR) || v < k.lambdaR)) k.lambdaR = v;
    }
    return k;
}

// ---- checks

CheckEntry check_outlier(const std::vector<TrajectoryRecord>& records, double eta) {
    CheckEntry e = make("outlier", kOutlierAnchor, Status::Pass);
    double mx = 0.0;
    for (const auto& r : records) {
        if (!std::isfinite(r.lambda2)) continue;
        double v = r.lambda2 * eta;
        mx = std::max(mx, v);
        if (!(v < 1.0)) {
            ++e.stepsViolating;
            e.steps.push_back(r.t);
        }
    }
    e.measured["max_lambda2_eta"] = mx;
    e.measured["margin"] = 1.0 - mx;
    e.threshold["lambda2_eta"] = 1.0;
    if (e.stepsViolating) e.status = Status::Fail;
    return e;
}

CheckEntry check_anorm_coupling(const std::vector<TrajectoryRecord>& records) {
    CheckEntry e = make("anorm_coupling", kCouplingAnchor, Status::ReportOnly);
    std::size_t steps = records.size() > 1 ? records.size() - 1 : 0;
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].anomaly) {
            ++e.stepsViolating;
            e.steps.push_back(records[i].t);
        }
    e.measured["anomaly_fraction"] = steps ? double(e.stepsViolating) / double(steps) : 0.0;
    e.measured["steps_compared"] = double(steps);
    e.threshold["anomaly_fraction"] = 0.1;
    return e;
}

CheckEntry check_ps_sign(const std::vector<TrajectoryRecord>& records, const std::vector<PhaseSegment>& segments) {
    CheckEntry e = make("ps_sign", kPsSignAnchor, Status::Pass);
    auto ph = phase_per_record(segments, records.size());
    std::size_t phaseI = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (ph[i] != Phase::I) continue;
        ++phaseI;
        if (records[i].t == 0) continue;
        if (!(records[i].DtF < 0)) {
            ++e.stepsViolating;
            e.steps.push_back(records[i].t);
        }
    }
    e.measured["phase1_steps"] = double(phaseI);
    e.threshold["dtf"] = 0.0;
    if (e.stepsViolating) e.status = Status::Fail;
    return e;
}

CheckEntry check_geometric_growth(const std::vector<TrajectoryRecord>& records, double eta,
                                  const std::vector<PhaseSegment>& segments, double epsilon2, double c) {
    CheckEntry e = make("geometric_growth", kGrowthAnchor, Status::ReportOnly);
    auto ph = phase_per_record(segments, records.size());
    const double shrink = 1.0 - epsilon2 - 1.0 / c;
    const double tau0 = shrink > 0 ? 1.0 / shrink - 1.0 : std::numeric_limits<double>::infinity();
    std::size_t applicable = 0, smallProjection = 0;
    for (std::size_t i = 0; i + 1 < records.size(); ++i) {
        if (ph[i] != Phase::II && ph[i] != Phase::III) continue;
        double tau = eta * records[i].lambda1 - 2.0;
        if (!(tau > tau0)) continue;
        const auto& r = records[i];
        double dn = std::sqrt(std::max(0.0, r.Rnorm2 + r.Dtv1 * r.Dtv1));
        if (std::fabs(r.Dtv1) < c * epsilon2 * dn) {
            ++smallProjection;
            continue;
        }
        ++applicable;
        double need = (1.0 + tau) * shrink * std::fabs(records[i].Dtv1);
        if (std::fabs(records[i + 1].Dtv1) < need) {
            ++e.stepsViolating;
            e.steps.push_back(records[i].t);
        }
    }
    double minRatio = std::numeric_limits<double>::infinity();
    for (const auto& s : segments)
        if (s.phase == Phase::II && s.start < records.size()) {
            const auto& r = records[s.start];
            double dn = std::sqrt(std::max(0.0, r.Rnorm2 + r.Dtv1 * r.Dtv1));
            minRatio = std::min(minRatio, std::fabs(r.Dtv1) / (epsilon2 * dn));
        }
    e.measured["applicable_steps"] = double(applicable);
    e.measured["below_projection_floor"] = double(smallProjection);
    e.measured["satisfied_fraction"] = applicable ? 1.0 - double(e.stepsViolating) / double(applicable) : 1.0;
    e.measured["min_dtv1_over_eps2_dnorm_at_phase2_start"] = minRatio;
    e.threshold["c"] = c;
    e.threshold["tau_min"] = tau0;
    return e;
}

CheckEntry check_dfpos_property(std::size_t trials, std::uint64_t seed) {
    CheckEntry e = make("dfpos_property", kDfposAnchor, Status::Pass);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dimDist(1, 32);
    std::uniform_real_distribution<double> scaleDist(0.2, 3.0);
    std::normal_distribution<double> g(0.0, 1.0);
    std::size_t done = 0, drawn = 0;
    double minMargin = std::numeric_limits<double>::infinity();
    while (done < trials) {
        ++drawn;
        int k = dimDist(rng);
        double s = scaleDist(rng);
        Vec D(k), Y(k);
        for (auto& v : Y) v = g(rng);
        for (auto& v : D) v = s * g(rng);
        double nd = norm(D), ny = norm(Y);
        if (!(nd > ny)) continue;
        ++done;
        double dtf = dot(D, lincomb(1.0, D, 1.0, Y));
        minMargin = std::min(minMargin, dtf / (nd * (nd - ny)));
        if (!(dtf > 0)) ++e.stepsViolating;
    }
    e.measured["trials"] = double(trials);
    e.measured["draws"] = double(drawn);
    e.measured["min_dtf_over_bound"] = minMargin;
    e.threshold["dtf"] = 0.0;
    if (e.stepsViolating) e.status = Status::Fail;
    return e;
}

CheckEntry check_contraction_property(std::size_t trials, std::uint64_t seed) {
    CheckEntry e = make("contraction_property", kContractionAnchor, Status::ReportOnly);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dimDist(2, 12);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t tr = 0; tr < trials; ++tr) {
        int n = dimDist(rng);
        Matrix B(n, n);
        for (auto& v : B.a) v = g(rng);
        Matrix M = matmul_nt(B, B);
        for (auto& v : M.a) v /= double(n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) M(i, j) = M(j, i);
        Vec ev = sym_eigvals(M);
        double L = ev.front(), lmin = std::max(0.0, ev.back());
        double eta = (0.02 + 0.97 * u01(rng)) * 2.0 / L;
        Vec u(n);
        for (auto& v : u) v = g(rng);
        double alpha = std::min(2.0 / eta - L, lmin);
        double lhs = norm(lincomb(1.0, u, -eta, matvec(M, u)));
        double rhs = (1.0 - eta * alpha) * norm(u);
        double excess = (lhs - rhs) / norm(u);
        worst = std::max(worst, excess);
        if (excess > 1e-10) ++e.stepsViolating;
    }
    e.measured["trials"] = double(trials);
    e.measured["max_excess"] = worst;
    e.threshold["excess"] = 1e-10;
    return e;
}

CheckEntry check_adrop(const std::vector<TrajectoryRecord>& records, double eta, std::size_t n, double ynorm) {
    CheckEntry e = make("adrop", kAdropAnchor, Status::ReportOnly);
    std::size_t applicable = 0, foOk = 0, realOk = 0, realStrict = 0;
    for (std::size_t i = 0; i + 1 < records.size(); ++i) {
        const auto& r = records[i];
        double dn = dnorm(r, n);
        if (!(dn > ynorm)) continue;
        ++applicable;
        double bound = -4.0 * eta / double(n) * (dn - ynorm) * (dn - ynorm);
        double pred = -4.0 * eta / double(n) * r.DtF;
        double real = records[i + 1].Anorm2 - r.Anorm2;
        double tol = r.foErrA * std::max(std::fabs(pred), std::fabs(real));
        if (pred < bound) ++foOk;
        else e.steps.push_back(r.t);
        if (real < bound + tol) ++realOk;
        if (real < bound) ++realStrict;
    }
    e.stepsViolating = applicable - foOk;
    e.measured["applicable_steps"] = double(applicable);
    e.measured["first_order_satisfied"] = double(foOk);
    e.measured["realized_satisfied_with_tolerance"] = double(realOk);
    e.measured["realized_satisfied_strict"] = double(realStrict);
    return e;
}

CheckEntry check_r_tracking(const VerifyInput& in, const DerivedConstants& k) {
    if (in.diverged) return skipped("r_tracking", kRtrackAnchor, "run diverged");
    if (!(k.BLambda > 1.0)) return skipped("r_tracking", kRtrackAnchor, "eta * sharpness never exceeds 1");
    if (!(k.lambdaR > 0)) return skipped("r_tracking", kRtrackAnchor, "no positive restricted lambda_min logged");
    CheckEntry e = make("r_tracking", kRtrackAnchor, Status::Pass);
    const auto& recs = in.records;
    const double bound = 6.0 * k.BD * (k.BLambda - 1.0) * std::sqrt(k.epsilon2) / (in.eta * k.lambdaR);
    double maxDiff = 0.0;
    std::size_t diffBad = 0, monoBad = 0, e1Bad = 0, monoChecked = 0;
    for (const auto& r : recs) {
        maxDiff = std::max(maxDiff, r.RdiffNorm);
        if (r.RdiffNorm > bound) {
            ++diffBad;
            e.steps.push_back(r.t);
        }
    }
    for (std::size_t i = 1; i < recs.size(); ++i) {
        if (!(recs[i - 1].lambda2 * in.eta < 1.0)) continue;
        ++monoChecked;
        if (recs[i].RprimeNorm2 > recs[i - 1].RprimeNorm2 * (1.0 + kMonoTol)) {
            ++monoBad;
            e.steps.push_back(recs[i].t);
        }
    }
    double maxE1Ratio = 0.0;
    std::size_t e1Logged = 0;
    for (std::size_t i = 0; i < in.diag.size() && i < recs.size(); ++i) {
        double e1 = in.diag[i].e1Norm;
        if (!std::isfinite(e1)) continue;
        ++e1Logged;
        double b = 6.0 * std::sqrt(k.epsilon2) * dnorm(recs[i], in.n) * (k.BLambda - 1.0);
        double ratio = b > 0 ? e1 / b : (e1 > 0 ? std::numeric_limits<double>::infinity() : 0.0);
        maxE1Ratio = std::max(maxE1Ratio, ratio);
        if (ratio > 1.0) {
            ++e1Bad;
            e.steps.push_back(recs[i].t);
        }
    }
    std::sort(e.steps.begin(), e.steps.end());
    e.steps.erase(std::unique(e.steps.begin(), e.steps.end()), e.steps.end());
    e.stepsViolating = e.steps.size();
    e.measured["max_rdiff_norm"] = maxDiff;
    e.measured["rdiff_violations"] = double(diffBad);
    e.measured["rprime_increases"] = double(monoBad);
    e.measured["rprime_steps_checked"] = double(monoChecked);
    e.measured["max_e1_over_bound"] = maxE1Ratio;
    e.measured["e1_violations"] = double(e1Bad);
    e.measured["e1_logged"] = double(e1Logged);
    e.threshold["rdiff_bound"] = bound;
    e.threshold["c_r"] = 6.0;
    if (e.stepsViolating) e.status = Status::Fail;
    return e;
}

CheckEntry check_relaxed_ps(const VerifyInput& in, const std::vector<PhaseSegment>& segments) {
    const auto& idx = in.cfg.relaxed_ps_indices;
    if (idx.empty()) return skipped("relaxed_ps", kRelaxedAnchor, "no indices configured");
    if (in.diag.empty()) return skipped("relaxed_ps", kRelaxedAnchor, "diagnostics log missing");
    CheckEntry e = make("relaxed_ps", kRelaxedAnchor, Status::ReportOnly);
    auto ph = phase_per_record(segments, in.records.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
        std::size_t total = 0, ok = 0;
        for (std::size_t i = 0; i < in.diag.size() && i < in.records.size(); ++i) {
            if (ph[i] != Phase::I) continue;
            const auto& d = in.diag[i];
            if (k >= d.relaxedLhs.size()) continue;
            double l = d.relaxedLhs[k], r = d.relaxedRhs[k];
            if (!std::isfinite(l) || !std::isfinite(r)) continue;
            ++total;
            if (l < r) ++ok;
        }
        std::string key = "index_" + std::to_string(idx[k]);
        e.measured[key + "_steps"] = double(total);
        e.measured[key + "_fraction"] = total ? double(ok) / double(total) : kNaN;
        e.stepsViolating += total - ok;
    }
    e.note = "forward-difference surrogate for dv_i/dt; a central difference is the obvious alternative";
    return e;
}

CheckEntry check_twolayer_theory(const VerifyInput& in) {
    if (in.cfg.model != ModelKind::TwoLayer) return skipped("twolayer_theory", kTheoryAnchor, "not a two-layer run");
    if (in.diverged) return skipped("twolayer_theory", kTheoryAnchor, "run diverged");
    if (in.diag.empty()) return skipped("twolayer_theory", kTheoryAnchor, "diagnostics log missing");
    CheckEntry e = make("twolayer_theory", kTheoryAnchor, Status::Pass);
    const auto& recs = in.records;
    const std::size_t T = std::min(recs.size(), in.diag.size());
    std::size_t stop = T;
    for (std::size_t i = 0; i < T; ++i)
        if (in.diag[i].mstarLambda1 > 1.0 / in.eta) {
            stop = i;
            break;
        }
    const double half = double(in.m) / 2.0;
    std::size_t starBad = 0, aBad = 0, boundBad = 0;
    for (std::size_t i = 0; i < stop; ++i) {
        const auto& r = recs[i];
        if (i + 1 < T && recs[i + 1].lambdaStar - r.lambdaStar < -kMonoTol * std::fabs(r.lambdaStar)) {
            ++starBad;
            e.steps.push_back(r.t);
        }
        if (r.Anorm2 < half) {
            ++aBad;
            e.steps.push_back(r.t);
        }
        if (r.lambda1 < r.lambdaStar * (1.0 - kMonoTol)) {
            ++boundBad;
            e.steps.push_back(r.t);
        }
    }
    std::sort(e.steps.begin(), e.steps.end());
    e.steps.erase(std::unique(e.steps.begin(), e.steps.end()), e.steps.end());
    e.stepsViolating = e.steps.size();

    double c2 = 0.0;
    std::size_t globalBound = 0, excursions = 0;
    bool above = false;
    double firstCross = kNaN;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const auto& r = recs[i];
        if (std::isfinite(r.GammaNorm)) c2 = std::max(c2, r.GammaNorm * double(in.m));
        if (r.lambda1 < r.lambdaStar * (1.0 - kMonoTol)) ++globalBound;
        bool now = r.lambda1 > 2.0 / in.eta;
        if (now && !above) {
            ++excursions;
            if (std::isnan(firstCross)) firstCross = double(r.t);
        }
        above = now;
    }
    e.measured["ps_window_steps"] = double(stop);
    e.measured["mstar_crossing_step"] = stop < T ? double(recs[stop].t) : kNaN;
    e.measured["first_crossing_step"] = firstCross;
    e.measured["lambda_star_decreases"] = double(starBad);
    e.measured["anorm_below_half_m"] = double(aBad);
    e.measured["lambda_below_lambda_star"] = double(boundBad);
    e.measured["lambda_below_lambda_star_whole_run"] = double(globalBound);
    e.measured["c2_estimate"] = c2;
    e.measured["excursions_above_2_over_eta"] = double(excursions);
    e.measured["unreturned_excursions"] = above ? 1.0 : 0.0;
    e.threshold["anorm_min"] = half;
    e.threshold["mstar_lambda1"] = 1.0 / in.eta;
    if (e.stepsViolating) e.status = Status::Fail;
    return e;
}

CheckEntry check_identities(const VerifyInput& in, const std::string& which) {
    const std::string anchor = which == "residual_update" ? "exact residual update D(t+1) = (I - eta M*) D(t)"
                               : which == "gram_update"   ? "exact three-term Gram update"
                               : which == "key_equation"  ? "sharpness-surrogate recursion"
                                                          : "exact output-norm update";
    if (in.cfg.model != ModelKind::TwoLayer) return skipped(which, anchor, "not a two-layer run");
    if (in.diverged) return skipped(which, anchor, "run diverged");
    if (in.diag.empty()) return skipped(which, anchor, "diagnostics log missing");
    CheckEntry e = make(which, anchor, Status::Pass);
    const double tol = which == "anorm_update" ? kAnormTol : kIdentityTol;
    double mx = 0.0;
    for (const auto& d : in.diag) {
        double v = which == "residual_update" ? d.resResidual
                   : which == "gram_update"   ? d.resGram
                   : which == "key_equation"  ? d.resKey
                                              : d.resAnorm;
        if (!(v <= tol)) {
            ++e.stepsViolating;
            e.steps.push_back(d.t);
        }
        if (std::isfinite(v)) mx = std::max(mx, v);
        else mx = std::numeric_limits<double>::infinity();
    }
    e.measured["max_residual"] = mx;
    e.threshold["max_residual"] = tol;
    if (e.stepsViolating) e.status = Status::Fail;
    return e;
}

CheckEntry check_null_space(const VerifyInput& in) {
    bool linear = in.cfg.model == ModelKind::TwoLayer || in.cfg.activation == Activation::Linear;
    if (!linear) return skipped("null_space", kNullAnchor, "nonlinear model");
    if (in.rank >= in.n) return skipped("null_space", kNullAnchor, "X^T X has full rank");
    if (!in.yInColumnSpace) return skipped("null_space", kNullAnchor, "labels leave the column space");
    if (in.diag.empty()) return skipped("null_space", kNullAnchor, "diagnostics log missing");
    if (in.diverged) return skipped("null_space", kNullAnchor, "run diverged");
    CheckEntry e = make("null_space", kNullAnchor, Status::Pass);
    double mx = 0.0;
    for (std::size_t i = 0; i < in.diag.size(); ++i) {
        const auto& d = in.diag[i];
        mx = std::max(mx, d.nullResidual);
        double dn = i < in.records.size() ? dnorm(in.records[i], in.n) : 0.0;
        if (!(d.nullResidual * dn <= kNullTol * dn + kNullFloor * in.ynorm)) {
            ++e.stepsViolating;
            e.steps.push_back(d.t);
        }
    }
    e.measured["max_null_fraction"] = mx;
    e.threshold["max_null_fraction"] = kNullTol;
    e.threshold["absolute_floor_over_ynorm"] = kNullFloor;
    if (e.stepsViolating) e.status = Status::Fail;
    return e;
}

CheckEntry check_interpolation_scale(const VerifyInput& in) {
    if (in.cfg.model != ModelKind::TwoLayer) return skipped("interpolation", kInterpAnchor, "not a two-layer run");
    if (in.diag.empty()) return skipped("interpolation", kInterpAnchor, "diagnostics log missing");
    CheckEntry e = make("interpolation", kInterpAnchor, Status::ReportOnly);
    double mx = 0.0;
    std::size_t inUnit = 0, total = 0;
    for (const auto& d : in.diag) {
        if (!std::isfinite(d.interpResidual)) continue;
        ++total;
        mx = std::max(mx, d.interpResidual);
        if (d.ks >= 0.0 && d.ks < 1.0) ++inUnit;
        else e.steps.push_back(d.t);
    }
    e.stepsViolating = total - inUnit;
    e.measured["max_residual"] = mx;
    e.measured["c6_estimate"] = mx * double(in.m);
    e.measured["ks_in_unit_fraction"] = total ? double(inUnit) / double(total) : kNaN;
    return e;
}

CheckEntry check_orth_decomposition(const std::vector<TrajectoryRecord>& records, std::size_t n) {
    CheckEntry e = make("orth_decomposition", kOrthAnchor, Status::ReportOnly);
    double mx = 0.0;
    for (const auto& r : records) {
        double full = r.loss * double(n);
        double err = std::fabs(full - r.Dtv1 * r.Dtv1 - r.Rnorm2) / std::max(full, 1e-300);
        mx = std::max(mx, err);
        if (err > kOrthTol) {
            ++e.stepsViolating;
            e.steps.push_back(r.t);
        }
    }
    e.measured["max_rel_error"] = mx;
    e.threshold["max_rel_error"] = kOrthTol;
    return e;
}

CheckEntry check_first_order(const std::vector<TrajectoryRecord>& records, const std::vector<PhaseSegment>& segments) {
    CheckEntry e = make("first_order", kFirstOrderAnchor, Status::ReportOnly);
    auto ph = phase_per_record(segments, records.size());
    double mxI = 0.0, mxAll = 0.0;
    std::size_t nI = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        double v = records[i].foErrD;
        if (!std::isfinite(v)) continue;
        mxAll = std::max(mxAll, v);
        if (ph[i] != Phase::I) continue;
        ++nI;
        mxI = std::max(mxI, v);
        if (v >= 0.05) {
            ++e.stepsViolating;
            e.steps.push_back(records[i].t);
        }
    }
    e.measured["phase1_steps"] = double(nI);
    e.measured["max_fo_err_d_phase1"] = mxI;
    e.measured["max_fo_err_d"] = mxAll;
    e.threshold["fo_err_d_phase1"] = 0.05;
    return e;
}

CheckEntry check_ma_smallness(const VerifyInput& in) {
    if (in.diag.empty()) return skipped("ma_smallness", kMaAnchor, "diagnostics log missing");
    CheckEntry e = make("ma_smallness", kMaAnchor, Status::ReportOnly);
    double mx = 0.0;
    for (std::size_t i = 0; i < in.diag.size() && i < in.records.size(); ++i) {
        double ratio = in.diag[i].maLambda1 / in.records[i].lambda1;
        if (!std::isfinite(ratio)) continue;
        mx = std::max(mx, ratio);
        if (ratio >= 0.05) {
            ++e.stepsViolating;
            e.steps.push_back(in.records[i].t);
        }
    }
    e.measured["max_ratio"] = mx;
    e.threshold["max_ratio"] = 0.05;
    return e;
}

const std::vector<std::string>& all_check_names() {
    static const std::vector<std::string> names = {
        "outlier",       "anorm_coupling", "ps_sign",         "geometric_growth", "dfpos_property",
        "contraction_property", "adrop",   "r_tracking",      "relaxed_ps",       "twolayer_theory",
        "residual_update", "gram_update",  "key_equation",    "anorm_update",     "null_space",
        "interpolation", "orth_decomposition", "first_order", "ma_smallness"};
    return names;
}

VerificationReport verify(const VerifyInput& in, const std::vector<std::string>& only) {
    for (const auto& n : only)
        if (std::find(all_check_names().begin(), all_check_names().end(), n) == all_check_names().end())
            throw ConfigError("unknown check '" + n + "'");
    auto wanted = [&](const std::string& n) {
        return only.empty() || std::find(only.begin(), only.end(), n) != only.end();
    };

    VerificationReport rep;
    rep.runConfig = config_to_json(in.cfg);
    const auto recs = finite_prefix(in.records);
    VerifyInput fin = in;
    fin.records = recs;
    if (fin.diag.size() > recs.size()) fin.diag.resize(recs.size());
    const DerivedConstants k = derived_constants(in);

    // sign and direction checks stop once the residual is at roundoff level
    std::size_t liveCount = recs.size();
    for (std::size_t i = 0; i < recs.size(); ++i)
        if (dnorm(recs[i], in.n) <= kConvergedFloor * in.ynorm) {
            liveCount = i;
            break;
        }
    const std::vector<TrajectoryRecord> live(recs.begin(), recs.begin() + liveCount);
    VerifyInput liveIn = fin;
    liveIn.records = live;
    if (liveIn.diag.size() > live.size()) liveIn.diag.resize(live.size());

    std::vector<double> lam, dtf;
    for (const auto& r : recs) {
        lam.push_back(r.lambda1);
        dtf.push_back(r.DtF);
    }
    if (!recs.empty()) rep.segments = segment(lam, dtf, in.eta, in.cfg.smooth_window, in.cfg.min_len);
    const CycleStats cs = cycle_stats(rep.segments);

    auto add = [&](const std::string& name, auto&& fn) {
        if (!wanted(name)) return;
        rep.checks.push_back(fn());
        if (in.diverged) {
            auto& c = rep.checks.back();
            if (c.status == Status::Pass || c.status == Status::Fail) {
                c.status = Status::Skipped;
                c.note = "run diverged";
            }
        }
    };
    add("outlier", [&] { return check_outlier(recs, in.eta); });
    add("anorm_coupling", [&] { return check_anorm_coupling(recs); });
    add("ps_sign", [&] { return check_ps_sign(live, rep.segments); });
    add("geometric_growth", [&] { return check_geometric_growth(live, in.eta, rep.segments, k.epsilon2, in.cfg.growth_c); });
    add("dfpos_property", [&] { return check_dfpos_property(in.cfg.dfpos_trials, in.cfg.seed); });
    add("contraction_property", [&] {
        return check_contraction_property(std::max<std::size_t>(1, in.cfg.dfpos_trials / 10), in.cfg.seed);
    });
    add("adrop", [&] { return check_adrop(recs, in.eta, in.n, in.ynorm); });
    add("r_tracking", [&] { return check_r_tracking(liveIn, k); });
    add("relaxed_ps", [&] { return check_relaxed_ps(fin, rep.segments); });
    add("twolayer_theory", [&] { return check_twolayer_theory(fin); });
    for (const char* id : {"residual_update", "gram_update", "key_equation", "anorm_update"})
        add(id, [&] { return check_identities(fin, id); });
    add("null_space", [&] { return check_null_space(fin); });
    add("interpolation", [&] { return check_interpolation_scale(fin); });
    add("orth_decomposition", [&] { return check_orth_decomposition(recs, in.n); });
    add("first_order", [&] { return check_first_order(recs, rep.segments); });
    add("ma_smallness", [&] { return check_ma_smallness(fin); });

    auto& C = rep.constants;
    C["eta"] = in.eta;
    C["convergedAt"] = liveCount < recs.size() ? double(recs[liveCount].t) : kNaN;
    C["two_over_eta"] = 2.0 / in.eta;
    C["epsilon2"] = k.epsilon2;
    C["BLambda"] = k.BLambda;
    C["BD"] = k.BD;
    C["lambda_r"] = k.lambdaR;
    C["kappaMeasured"] = in.data.kappa;
    C["chiMeasured"] = in.data.chi.value_or(kNaN);
    double c2 = 0.0, c6 = 0.0, idmax = 0.0, anomalies = 0.0;
    for (const auto& r : recs)
        if (std::isfinite(r.GammaNorm)) c2 = std::max(c2, r.GammaNorm * double(in.m));
    for (const auto& d : fin.diag) {
        if (std::isfinite(d.interpResidual)) c6 = std::max(c6, d.interpResidual * double(in.m));
        for (double v : {d.resResidual, d.resGram, d.resKey})
            if (std::isfinite(v)) idmax = std::max(idmax, v);
    }
    for (std::size_t i = 1; i < recs.size(); ++i) anomalies += recs[i].anomaly ? 1.0 : 0.0;
    C["c2Estimate"] = in.cfg.model == ModelKind::TwoLayer ? c2 : kNaN;
    C["c6Estimate"] = in.cfg.model == ModelKind::TwoLayer && !fin.diag.empty() ? c6 : kNaN;
    C["maxIdentityResiduals"] = in.cfg.model == ModelKind::TwoLayer && !fin.diag.empty() ? idmax : kNaN;
    C["anomalyFraction"] = recs.size() > 1 ? anomalies / double(recs.size() - 1) : 0.0;
    C["cycles"] = double(cs.cycles);
    C["meanPeriod"] = cs.meanPeriod;
    double firstCross = kNaN;
    for (const auto& r : recs)
        if (r.lambda1 >= 2.0 / in.eta) {
            firstCross = double(r.t);
            break;
        }
    C["firstCrossingStep"] = firstCross;
    C["initialLoss"] = recs.empty() ? kNaN : recs.front().loss;
    C["finalLoss"] = recs.empty() ? kNaN : recs.back().loss;
    double psRate = kNaN;
    auto firstI = std::find_if(rep.segments.begin(), rep.segments.end(), [](const PhaseSegment& s) { return s.phase == Phase::I; });
    if (firstI != rep.segments.end()) {
        const auto& s = *firstI;
        psRate = s.end > s.start ? (lam[s.end] - lam[s.start]) / double(s.end - s.start) : 0.0;
    }
    C["psRate"] = psRate;
    C["diverged"] = in.diverged ? 1.0 : 0.0;
    return rep;
}

}  // namespace eos
