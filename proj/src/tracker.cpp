#include "eoslab/tracker.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace eos {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace

void validate(const RunConfig& cfg) {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (cfg.steps < 1) fail("steps must be >= 1");
    if (cfg.measure_every < 1) fail("measure_every must be >= 1");
    if (!(cfg.eta > 0) && !(cfg.eta_fraction > 0)) fail("need eta > 0 or eta_fraction > 0");
    if (cfg.eta < 0) fail("eta must be positive");
    if (cfg.smooth_window < 1) fail("smooth_window must be >= 1");
    if (cfg.min_len < 1) fail("min_len must be >= 1");
    if (cfg.dfpos_trials < 1) fail("dfpos_trials must be >= 1");
    const auto& dsp = cfg.data;
    if (dsp.source == "spectrum") {
        if (dsp.n < 1 || dsp.d < 1) fail("data n and d must be >= 1");
        std::size_t r = dsp.spectrum.empty() ? dsp.rank : dsp.spectrum.size();
        if (r < 1 || r > std::min(dsp.n, dsp.d)) fail("data rank must be in [1, min(n, d)]");
        if (dsp.spectrum.empty() && (!(dsp.top > 0) || !(dsp.gap >= 1) || !(dsp.ratio >= 1)))
            fail("spectrum shape needs top > 0, gap >= 1, ratio >= 1");
        if (dsp.labels != "random_sign" && dsp.labels != "align_eigvec" && dsp.labels != "projection_floor")
            fail("unknown label mode '" + dsp.labels + "'");
        if (dsp.labels == "align_eigvec" && (dsp.align_index < 1 || dsp.align_index > r))
            fail("align_index out of range");
        if (dsp.labels == "projection_floor" && (dsp.kappa < 0 || dsp.kappa * dsp.kappa * double(r) > 1.0 + 1e-12))
            fail("kappa must lie in [0, 1/sqrt(rank)]");
    } else if (dsp.source == "csv") {
        if (dsp.csv_path.empty()) fail("data source csv needs csv_path");
    } else {
        fail("unknown data source '" + dsp.source + "'");
    }
    if (cfg.model == ModelKind::TwoLayer) {
        if (cfg.width % 2 != 0 || cfg.width == 0) fail("two-layer width must be even and positive");
        if (dsp.source == "spectrum" && cfg.width / 2 < dsp.d) fail("two-layer width/2 must be >= d");
        if (cfg.freeze_depth != 0) fail("freeze_depth applies to mlp runs only");
    } else {
        for (auto h : cfg.hidden)
            if (h == 0) fail("hidden widths must be positive");
        if (cfg.freeze_depth > cfg.hidden.size() + 1) fail("freeze_depth exceeds layer count");
    }
    for (auto i : cfg.relaxed_ps_indices)
        if (i < 1) fail("relaxed_ps_indices are 1-based");
}

Dataset build_dataset(const RunConfig& cfg) {
    const auto& dsp = cfg.data;
    if (dsp.source == "csv") {
        Dataset ds = load_csv(dsp.csv_path, dsp.csv_header);
        return dsp.mean_subtract ? mean_subtract(ds) : ds;
    }
    Vec spec = dsp.spectrum.empty() ? shaped_spectrum(dsp.rank, dsp.top, dsp.gap, dsp.ratio) : dsp.spectrum;
    LabelMode mode;
    if (dsp.labels == "random_sign") mode = LabelMode::random_sign();
    else if (dsp.labels == "align_eigvec") mode = LabelMode::align(dsp.align_index);
    else mode = LabelMode::floor(dsp.kappa, dsp.sign_labels);
    Dataset ds = gen_spectrum_dataset(dsp.n, dsp.d, spec, mode, dsp.seed.value_or(cfg.seed));
    return dsp.mean_subtract ? mean_subtract(ds) : ds;
}

TwoLayerNet build_twolayer(const RunConfig& cfg, const Dataset& ds) {
    if (cfg.width / 2 < ds.d()) throw ConfigError("two-layer width/2 must be >= input dimension");
    return init_symmetric(cfg.width, ds.d(), splitmix(cfg.seed), cfg.w_scale);
}

MlpNet build_mlp(const RunConfig& cfg, const Dataset& ds) {
    std::vector<std::size_t> dims{ds.d()};
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(1);
    MlpNet net = init_mlp(dims, cfg.activation, splitmix(cfg.seed), cfg.init_scale);
    net.freezeMask = freeze_outer(net.depth(), cfg.freeze_depth);
    return net;
}

double resolve_eta(const RunConfig& cfg, const Dataset& ds, double* lambda0) {
    Matrix M0;
    if (cfg.model == ModelKind::TwoLayer) {
        auto s = evaluate(build_twolayer(cfg, ds), ds);
        M0 = expand_core(ds, core_M(s, ds.n()));
    } else {
        M0 = gram_split(build_mlp(cfg, ds), ds.X).M;
    }
    double l0 = measure(M0).lambda1;
    if (lambda0) *lambda0 = l0;
    if (cfg.eta > 0) return cfg.eta;
    if (!(l0 > 0)) throw ConfigError("initial sharpness is zero; set eta explicitly");
    return cfg.eta_fraction * 2.0 / l0;
}

Vec rprime_step(const Vec& Rprime, const Matrix& K, const Vec& v1, double eta) {
    return rprime_step(Rprime, [&](const Vec& x) { return matvec(K, x); }, v1, eta);
}

Vec rprime_step(const Vec& Rprime, const std::function<Vec(const Vec&)>& applyK, const Vec& v1, double eta) {
    double c = dot(v1, Rprime);
    Vec P = lincomb(1.0, Rprime, -c, v1);
    return lincomb(1.0, Rprime, -eta, applyK(P));
}

double norm2_change(const Vec& a0, const Vec& a1) {
    double s = 0.0;
    for (std::size_t i = 0; i < a0.size(); ++i) s += (a1[i] - a0[i]) * (a1[i] + a0[i]);
    return s;
}

FirstOrderErrors first_order_errors(const Vec& D0, const Vec& D1, const Vec& MD0, double dA, double DtF, double eta) {
    FirstOrderErrors fe;
    const double n = double(D0.size());
    Vec pred = lincomb(1.0, D0, -eta, MD0);
    fe.foErrD = norm(lincomb(1.0, D1, -1.0, pred)) / std::max(eta * norm(MD0), 1e-30);
    double predA = -4.0 * eta / n * DtF;
    double actA = dA;
    fe.foErrA = std::fabs(actA - predA) / std::max({std::fabs(predA), std::fabs(actA), 1e-30});
    return fe;
}

int dead_sign(double delta, double scale) {
    double zone = kSignDeadZone * std::max(1.0, std::fabs(scale));
    if (delta > zone) return 1;
    if (delta < -zone) return -1;
    return 0;
}

bool is_anomaly(double dLambda, double lambdaScale, double dA, double aScale) {
    int a = dead_sign(dLambda, lambdaScale), b = dead_sign(dA, aScale);
    return a != 0 && b != 0 && a != b;
}

namespace {

struct TwoLayerAdapter {
    const Dataset& ds;
    double eta;
    TwoLayerState cur, nxt;
    Matrix Mcur, Mnxt;
    bool haveMcur = false, haveMnxt = false;

    TwoLayerAdapter(const Dataset& d, const TwoLayerNet& net, double e) : ds(d), eta(e), cur(evaluate(net, d)) {}

    const Vec& F() const { return cur.F; }
    const Vec& D() const { return cur.D; }
    double anorm2() const { return cur.anorm2; }
    double DtF() const { return cur.DtF; }
    bool diverged() const { return eos::diverged(cur, ds); }
    void prepare_next() {
        nxt = evaluate(gd_step(cur, ds, eta), ds);
        haveMnxt = false;
    }
    const Vec& nextD() const { return nxt.D; }
    double anormChange() const { return norm2_change(cur.net.A, nxt.net.A); }
    void commit() {
        cur = std::move(nxt);
        if (haveMnxt) {
            Mcur = std::move(Mnxt);
            haveMcur = true;
        } else {
            haveMcur = false;
        }
        haveMnxt = false;
    }
    const Matrix& gram() {
        if (!haveMcur) {
            Mcur = expand_core(ds, core_M(cur, ds.n()));
            haveMcur = true;
        }
        return Mcur;
    }
    Vec applyM(const Vec& x) const { return apply_core(ds, core_M(cur, ds.n()), x); }
    Vec applyK(const Vec& x) const { return apply_core(ds, core_Mstar(cur, ds.n(), eta), x); }
    double gammaNorm() const { return gamma_norm(cur, ds); }
    double lambdaMin() const { return ds.r() < ds.n() ? 0.0 : restricted_lambda_min(cur, ds); }
    double lambdaMinCol() const { return restricted_lambda_min(cur, ds); }
    // output-weight part: (2/(mn)) X^T W^T W X
    double maLambda1() const {
        Matrix core = cur.WtW;
        const double c = 2.0 / (double(cur.net.m()) * double(ds.n()));
        for (auto& v : core.a) v *= c;
        return sym_eigvals(reduce_core(ds, core)).front();
    }
    EigenResult fullEig() {
        auto e = sym_eig(reduce_core(ds, core_M(cur, ds.n())));
        EigenResult out;
        out.values = e.values;
        out.vectors = matmul(ds.V, e.vectors);
        return out;
    }
    void modelDiag(Diagnostics& dg, double lambda1) {
        dg.resResidual = check_residual_update(ds, cur, nxt, eta);
        Mnxt = expand_core(ds, core_M(nxt, ds.n()));
        haveMnxt = true;
        dg.resGram = check_gram_update(ds, cur, nxt, eta, gram(), Mnxt, lambda1);
        dg.resKey = check_key_equation(ds, cur, nxt, eta);
        dg.resAnorm = check_anorm_update(ds, cur, nxt, eta);
        auto ip = check_interpolation(ds, cur, nxt, eta);
        dg.ks = ip.ks;
        dg.interpResidual = ip.residual;
        dg.mstarLambda1 = mstar_lambda_max(cur, ds, eta);
    }
    void finish(RunResult& res) const { res.twolayer = cur.net; }
};

struct MlpAdapter {
    const Dataset& ds;
    double eta;
    MlpNet cur, nxt;
    LossGrads lgCur, lgNxt;
    GramSplit gs;
    bool haveGs = false;

    MlpAdapter(const Dataset& d, const MlpNet& net, double e) : ds(d), eta(e), cur(net), lgCur(loss_and_grads(net, d)) {}

    const Vec& F() const { return lgCur.F; }
    const Vec& D() const { return lgCur.D; }
    double anorm2() const { return output_norm2(cur); }
    double DtF() const { return dot(lgCur.D, lgCur.F); }
    bool diverged() const {
        for (const auto& W : cur.layers)
            if (!all_finite(W)) return true;
        return !std::isfinite(lgCur.loss) || lgCur.loss > 1e12 || !all_finite(lgCur.D);
    }
    void prepare_next() {
        nxt = gd_step_mlp(cur, lgCur.grads, eta, cur.freezeMask);
        lgNxt = loss_and_grads(nxt, ds);
    }
    const Vec& nextD() const { return lgNxt.D; }
    double anormChange() const { return norm2_change(cur.layers.back().a, nxt.layers.back().a); }
    void commit() {
        cur = std::move(nxt);
        lgCur = std::move(lgNxt);
        haveGs = false;
    }
    const Matrix& gram() {
        if (!haveGs) {
            gs = gram_split(cur, ds.X);
            haveGs = true;
        }
        return gs.M;
    }
    Vec applyM(const Vec& x) {
        if (haveGs) return matvec(gs.M, x);
        return gram_apply(cur, ds.X, x);
    }
    Vec applyK(const Vec& x) { return applyM(x); }
    double gammaNorm() const { return kNaN; }
    double lambdaMinCol() {
        if (ds.r() == 0) return kNaN;
        Matrix C = matmul_tn(ds.V, matmul(gram(), ds.V));
        for (std::size_t i = 0; i < C.rows; ++i)
            for (std::size_t j = i + 1; j < C.cols; ++j) C(i, j) = C(j, i) = 0.5 * (C(i, j) + C(j, i));
        return sym_eigvals(C).back();
    }
    double lambdaMin() {
        if (cur.param_count() < ds.n()) return 0.0;
        if (ds.n() > 400) return kNaN;
        return sym_eigvals(gram()).back();
    }
    double maLambda1() {
        gram();
        return top_k_eig(gs.M_A, 1).values[0];
    }
    EigenResult fullEig() { return sym_eig(gram()); }
    void modelDiag(Diagnostics& dg, double) {
        dg.resResidual = dg.resGram = dg.resKey = dg.resAnorm = kNaN;
        dg.ks = dg.interpResidual = dg.mstarLambda1 = kNaN;
    }
    void finish(RunResult& res) const { res.mlp = cur; }
};

template <class Adapter>
void drive(Adapter& ad, RunResult& res) {
    const RunConfig& cfg = res.cfg;
    const Dataset& ds = res.ds;
    const double eta = res.eta;
    const std::size_t n = ds.n();
    const bool gramV1 = cfg.v1() == V1Source::Gram;
    const Vec dataV1 = ds.r() > 0 ? ds.v(0) : Vec(n, 0.0);
    const std::size_t relaxedLimit = cfg.relaxed_ps_steps == 0 ? cfg.steps : cfg.relaxed_ps_steps;
    const std::size_t nRelaxed = cfg.relaxed_ps_indices.size();

    std::optional<SpectrumState> prevSpec;
    Vec v1cur = dataV1;
    Vec Rp;
    Vec prevR, prevMR;
    bool prevWasLastStep = false;
    EigenResult prevEig;
    Vec prevF;
    bool havePrevEig = false;
    std::vector<bool> relaxedNoticed(nRelaxed, false);

    std::size_t fallbacks = 0, firstFallback = 0;
    auto abort_run = [&](std::size_t t, const std::string& why) {
        TrajectoryRecord r;
        r.t = t;
        r.loss = dot(ad.D(), ad.D()) / double(n);
        if (!std::isfinite(r.loss)) r.loss = std::numeric_limits<double>::infinity();
        r.lambda1 = r.lambda2 = r.lambdaStar = kNaN;
        r.twoOverEta = 2.0 / eta;
        r.Anorm2 = ad.anorm2();
        r.DtF = ad.DtF();
        r.Dtv1 = r.Rnorm2 = r.RprimeNorm2 = r.RdiffNorm = r.GammaNorm = r.v1drift = kNaN;
        r.foErrD = r.foErrA = r.alphaMargin = kNaN;
        res.records.push_back(r);
        Diagnostics dg;
        dg.t = t;
        dg.resResidual = dg.resGram = dg.resKey = dg.resAnorm = dg.ks = dg.interpResidual = kNaN;
        dg.e1Norm = dg.lambdaMinCol = dg.mstarLambda1 = dg.nullResidual = dg.maLambda1 = dg.lambdaMin = kNaN;
        dg.relaxedLhs.assign(nRelaxed, kNaN);
        dg.relaxedRhs.assign(nRelaxed, kNaN);
        res.diag.push_back(dg);
        res.diverged = true;
        res.divergedAt = t;
        res.notices.push_back(why);
    };

    for (std::size_t t = 0; t < cfg.steps; ++t) {
        const bool measured = t % cfg.measure_every == 0;
        if (ad.diverged()) {
            abort_run(t, "run diverged at step " + std::to_string(t));
            break;
        }
        ad.prepare_next();

        if (measured) try {
            const Matrix& M = ad.gram();
            SpectrumState spec = measure(M, prevSpec ? &*prevSpec : nullptr, &dataV1);
            if (spec.usedFallback && fallbacks++ == 0) firstFallback = t;
            v1cur = gramV1 ? spec.v1 : dataV1;
            const Vec& D = ad.D();
            double dv = dot(D, v1cur);
            Vec R = lincomb(1.0, D, -dv, v1cur);
            if (t == 0) Rp = R;

            TrajectoryRecord r;
            r.t = t;
            r.loss = dot(D, D) / double(n);
            r.lambda1 = spec.lambda1;
            r.lambda2 = spec.lambda2;
            r.lambdaStar = spec.lambdaStar;
            r.twoOverEta = 2.0 / eta;
            r.Anorm2 = ad.anorm2();
            r.DtF = ad.DtF();
            r.Dtv1 = dv;
            r.Rnorm2 = dot(R, R);
            r.RprimeNorm2 = dot(Rp, Rp);
            r.RdiffNorm = norm(lincomb(1.0, R, -1.0, Rp));
            r.GammaNorm = ad.gammaNorm();
            r.v1drift = prevSpec ? spec.driftFromPrev : 0.0;
            if (!res.records.empty()) {
                const auto& p = res.records.back();
                r.anomaly = is_anomaly(r.lambda1 - p.lambda1, r.lambda1, r.Anorm2 - p.Anorm2, r.Anorm2);
            }
            Vec MD = matvec(M, D);
            auto fe = first_order_errors(D, ad.nextD(), MD, ad.anormChange(), r.DtF, eta);
            r.foErrD = fe.foErrD;
            r.foErrA = fe.foErrA;

            Diagnostics dg;
            dg.t = t;
            ad.modelDiag(dg, spec.lambda1);
            dg.lambdaMin = ad.lambdaMin();
            dg.lambdaMinCol = ad.lambdaMinCol();
            dg.maLambda1 = ad.maLambda1();
            double dn = norm(D);
            Vec proj = matvec(ds.V, matvec_t(ds.V, D));
            dg.nullResidual = dn > 0 ? norm(lincomb(1.0, D, -1.0, proj)) / dn : 0.0;
            dg.e1Norm = kNaN;
            r.alphaMargin = std::min(2.0 / eta - r.lambda1, dg.lambdaMin);

            if (prevWasLastStep && !res.diag.empty()) {
                Vec pred = lincomb(1.0, prevR, -eta, prevMR);
                res.diag.back().e1Norm = norm(lincomb(1.0, R, -1.0, pred));
            }
            prevR = R;
            prevMR = ad.applyK(R);

            dg.relaxedLhs.assign(nRelaxed, kNaN);
            dg.relaxedRhs.assign(nRelaxed, kNaN);
            if (nRelaxed > 0 && t < relaxedLimit) {
                EigenResult e = ad.fullEig();
                const double top = std::fabs(e.values.front());
                for (std::size_t k = 0; k < nRelaxed; ++k) {
                    std::size_t i = cfg.relaxed_ps_indices[k] - 1;
                    if (i >= e.values.size() || e.values[i] <= kRankTol * top) {
                        if (!relaxedNoticed[k]) {
                            res.notices.push_back("relaxed PS index " + std::to_string(i + 1) + " beyond rank, skipped");
                            relaxedNoticed[k] = true;
                        }
                        continue;
                    }
                    Vec vi = e.vec(i);
                    bool aligned = havePrevEig && i < prevEig.values.size();
                    if (aligned) {
                        Vec pv = prevEig.vec(i);
                        if (dot(pv, vi) < 0)
                            for (auto& x : vi) x = -x;
                    } else if (dot(D, vi) < 0) {
                        for (auto& x : vi) x = -x;
                    }
                    e.vectors.set_col(i, vi);
                    double gapLo = i > 0 ? e.values[i - 1] - e.values[i] : top;
                    double gapHi = i + 1 < e.values.size() ? e.values[i] - e.values[i + 1] : top;
                    bool clustered = std::min(gapLo, gapHi) < kDegenerateGap * top;
                    if (clustered) {
                        if (!relaxedNoticed[k]) {
                            res.notices.push_back("relaxed PS index " + std::to_string(i + 1) +
                                                  " sits in a degenerate cluster, excluded");
                            relaxedNoticed[k] = true;
                        }
                        continue;
                    }
                    dg.relaxedRhs[k] = e.values[i] * dot(D, vi);
                    if (aligned && prevWasLastStep && !res.diag.empty() &&
                        std::isfinite(res.diag.back().relaxedRhs[k])) {
                        Vec pv = prevEig.vec(i);
                        res.diag.back().relaxedLhs[k] = dot(prevF, lincomb(1.0, vi, -1.0, pv)) / eta;
                    }
                }
                prevEig = std::move(e);
                prevF = ad.F();
                havePrevEig = true;
            } else {
                havePrevEig = false;
            }

            res.records.push_back(r);
            res.diag.push_back(std::move(dg));
            prevSpec = std::move(spec);
        } catch (const std::runtime_error& e) {
            abort_run(t, std::string("eigensolver failed at step ") + std::to_string(t) + ": " + e.what());
            break;
        }
        prevWasLastStep = measured && cfg.measure_every == 1;

        Rp = rprime_step(Rp, [&](const Vec& x) { return ad.applyK(x); }, v1cur, eta);
        ad.commit();
    }
    if (fallbacks)
        res.notices.push_back("power iteration fell back to the full solver at " + std::to_string(fallbacks) +
                              " steps, first at step " + std::to_string(firstFallback));
    ad.finish(res);
}

}  // namespace

RunResult run(const RunConfig& cfg) {
    validate(cfg);
    RunResult res;
    res.cfg = cfg;
    res.ds = build_dataset(cfg);
    res.eta = resolve_eta(cfg, res.ds, &res.lambda0);
    if (cfg.model == ModelKind::TwoLayer) {
        TwoLayerAdapter ad(res.ds, build_twolayer(cfg, res.ds), res.eta);
        drive(ad, res);
    } else {
        MlpAdapter ad(res.ds, build_mlp(cfg, res.ds), res.eta);
        drive(ad, res);
    }
    return res;
}

// ---- CSV I/O

const std::vector<std::string> kTrajectoryColumns = {
    "t",           "loss",       "lambda1",     "lambda2",      "lambda_star", "two_over_eta",
    "anorm2",      "dtf",        "dtv1",        "rnorm2",       "rprime_norm2", "rdiff_norm",
    "gamma_norm",  "v1_drift",   "anomaly",     "fo_err_d",     "fo_err_a",    "alpha_margin"};

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_cell(const std::string& s, const std::string& column, std::size_t row) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        std::ostringstream os;
        os << "row " << row << ": column '" << column << "' is not numeric: '" << s << "'";
        throw SchemaError(os.str());
    }
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path, const std::vector<std::string>* expected) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (content.empty()) throw SchemaError(path + ": empty file");
    if (content.back() != '\n') throw SchemaError(path + ": truncated (last line not terminated)");
    std::istringstream ls(content);
    std::string line;
    Table tb;
    std::getline(ls, line);
    tb.header = split_line(line);
    if (expected) {
        for (std::size_t i = 0; i < std::max(expected->size(), tb.header.size()); ++i) {
            std::string want = i < expected->size() ? (*expected)[i] : "<none>";
            std::string got = i < tb.header.size() ? tb.header[i] : "<missing>";
            if (want != got)
                throw SchemaError(path + ": column " + std::to_string(i + 1) + " should be '" + want + "' but is '" +
                                  got + "'");
        }
    }
    std::size_t row = 1;
    while (std::getline(ls, line)) {
        ++row;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != tb.header.size()) {
            std::ostringstream os;
            os << path << ": row " << row << " has " << cells.size() << " fields, expected " << tb.header.size();
            if (cells.size() < tb.header.size()) os << " (missing column '" << tb.header[cells.size()] << "')";
            throw SchemaError(os.str());
        }
        std::vector<double> vals(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) vals[c] = parse_cell(cells[c], tb.header[c], row);
        tb.rows.push_back(std::move(vals));
    }
    return tb;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (std::size_t i = 0; i < kTrajectoryColumns.size(); ++i) out << (i ? "," : "") << kTrajectoryColumns[i];
    out << "\n";
    for (const auto& r : records) {
        out << r.t << "," << format_double(r.loss) << "," << format_double(r.lambda1) << ","
            << format_double(r.lambda2) << "," << format_double(r.lambdaStar) << "," << format_double(r.twoOverEta)
            << "," << format_double(r.Anorm2) << "," << format_double(r.DtF) << "," << format_double(r.Dtv1) << ","
            << format_double(r.Rnorm2) << "," << format_double(r.RprimeNorm2) << "," << format_double(r.RdiffNorm)
            << "," << format_double(r.GammaNorm) << "," << format_double(r.v1drift) << "," << (r.anomaly ? 1 : 0)
            << "," << format_double(r.foErrD) << "," << format_double(r.foErrA) << ","
            << format_double(r.alphaMargin) << "\n";
    }
}

std::vector<TrajectoryRecord> read_trajectory_csv(const std::string& path) {
    Table tb = read_table(path, &kTrajectoryColumns);
    std::vector<TrajectoryRecord> recs;
    for (std::size_t i = 0; i < tb.rows.size(); ++i) {
        const auto& v = tb.rows[i];
        TrajectoryRecord r;
        if (!(v[0] >= 0) || v[0] != std::floor(v[0]))
            throw SchemaError(path + ": row " + std::to_string(i + 2) + ": column 't' is not a step index");
        r.t = std::size_t(v[0]);
        r.loss = v[1];
        r.lambda1 = v[2];
        r.lambda2 = v[3];
        r.lambdaStar = v[4];
        r.twoOverEta = v[5];
        r.Anorm2 = v[6];
        r.DtF = v[7];
        r.Dtv1 = v[8];
        r.Rnorm2 = v[9];
        r.RprimeNorm2 = v[10];
        r.RdiffNorm = v[11];
        r.GammaNorm = v[12];
        r.v1drift = v[13];
        if (v[14] != 0.0 && v[14] != 1.0)
            throw SchemaError(path + ": row " + std::to_string(i + 2) + ": column 'anomaly' must be 0 or 1");
        r.anomaly = v[14] == 1.0;
        r.foErrD = v[15];
        r.foErrA = v[16];
        r.alphaMargin = v[17];
        recs.push_back(r);
    }
    return recs;
}

std::vector<std::string> diagnostics_columns(std::size_t relaxedCount) {
    std::vector<std::string> c = {"t",        "res_residual", "res_gram",        "res_key",      "res_anorm",
                                  "ks",       "interp_residual", "e1_norm",      "lambda_min_col", "mstar_lambda1",
                                  "null_residual", "ma_lambda1", "lambda_min"};
    for (std::size_t k = 0; k < relaxedCount; ++k) {
        c.push_back("relaxed_lhs_" + std::to_string(k));
        c.push_back("relaxed_rhs_" + std::to_string(k));
    }
    return c;
}

void write_diagnostics_csv(const std::string& path, const std::vector<Diagnostics>& diag, std::size_t relaxedCount) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    auto cols = diagnostics_columns(relaxedCount);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    for (const auto& d : diag) {
        out << d.t;
        for (double v : {d.resResidual, d.resGram, d.resKey, d.resAnorm, d.ks, d.interpResidual, d.e1Norm,
                         d.lambdaMinCol, d.mstarLambda1, d.nullResidual, d.maLambda1, d.lambdaMin})
            out << "," << format_double(v);
        for (std::size_t k = 0; k < relaxedCount; ++k)
            out << "," << format_double(k < d.relaxedLhs.size() ? d.relaxedLhs[k] : kNaN) << ","
                << format_double(k < d.relaxedRhs.size() ? d.relaxedRhs[k] : kNaN);
        out << "\n";
    }
}

std::vector<Diagnostics> read_diagnostics_csv(const std::string& path) {
    Table tb = read_table(path, nullptr);
    if (tb.header.size() < 13 || (tb.header.size() - 13) % 2 != 0)
        throw SchemaError(path + ": unexpected diagnostics column count");
    std::size_t relaxed = (tb.header.size() - 13) / 2;
    auto expect = diagnostics_columns(relaxed);
    for (std::size_t i = 0; i < expect.size(); ++i)
        if (tb.header[i] != expect[i])
            throw SchemaError(path + ": column " + std::to_string(i + 1) + " should be '" + expect[i] + "' but is '" +
                              tb.header[i] + "'");
    std::vector<Diagnostics> out;
    for (const auto& v : tb.rows) {
        Diagnostics d;
        d.t = std::size_t(v[0]);
        d.resResidual = v[1];
        d.resGram = v[2];
        d.resKey = v[3];
        d.resAnorm = v[4];
        d.ks = v[5];
        d.interpResidual = v[6];
        d.e1Norm = v[7];
        d.lambdaMinCol = v[8];
        d.mstarLambda1 = v[9];
        d.nullResidual = v[10];
        d.maLambda1 = v[11];
        d.lambdaMin = v[12];
        for (std::size_t k = 0; k < relaxed; ++k) {
            d.relaxedLhs.push_back(v[13 + 2 * k]);
            d.relaxedRhs.push_back(v[14 + 2 * k]);
        }
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace eos
