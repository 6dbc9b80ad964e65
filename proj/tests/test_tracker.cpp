#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "eoslab/tracker.hpp"

using namespace eos;
namespace fs = std::filesystem;

namespace {

RunConfig small_cfg() {
    RunConfig c;
    c.model = ModelKind::TwoLayer;
    c.width = 40;
    c.eta_fraction = 0.8;
    c.steps = 300;
    c.seed = 3;
    c.v1_source = V1Source::Gram;
    c.data.n = 40;
    c.data.d = 10;
    c.data.rank = 10;
    c.data.top = 12;
    c.data.gap = 3;
    c.data.ratio = 1.3;
    c.data.kappa = 0.14;
    c.dfpos_trials = 100;
    return c;
}

std::string tmp_path(const std::string& name) { return (fs::temp_directory_path() / ("eoslab_tr_" + name)).string(); }

std::string slurp(const std::string& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Tracker, ValidateRejects) {
    auto c = small_cfg();
    EXPECT_NO_THROW(validate(c));
    c.steps = 0;
    EXPECT_THROW(validate(c), ConfigError);
    c = small_cfg();
    c.width = 41;
    EXPECT_THROW(validate(c), ConfigError);
    c = small_cfg();
    c.width = 10;  // width/2 < d
    EXPECT_THROW(validate(c), ConfigError);
    c = small_cfg();
    c.data.rank = 11;
    EXPECT_THROW(validate(c), ConfigError);
    c = small_cfg();
    c.data.labels = "noise";
    EXPECT_THROW(validate(c), ConfigError);
    c = small_cfg();
    c.eta = 0;
    c.eta_fraction = 0;
    EXPECT_THROW(validate(c), ConfigError);
    c = small_cfg();
    c.freeze_depth = 1;
    EXPECT_THROW(validate(c), ConfigError);
    c = small_cfg();
    c.model = ModelKind::Mlp;
    c.hidden = {8};
    c.freeze_depth = 3;
    EXPECT_THROW(validate(c), ConfigError);
}

TEST(Tracker, RprimeKillsV1) {
    Matrix M = Matrix::diag({4, 2, 1});
    Vec v1{1, 0, 0};
    Vec r = rprime_step({3, 0, 0}, M, v1, 0.1);
    EXPECT_EQ(r, (Vec{3, 0, 0}));
}

TEST(Tracker, RprimeDiagonalScaling) {
    Matrix M = Matrix::diag({4, 2, 1});
    Vec v1{1, 0, 0};
    Vec r = rprime_step({0, 1, 1}, M, v1, 0.1);
    EXPECT_NEAR(r[1], 1 - 0.1 * 2, 1e-15);
    EXPECT_NEAR(r[2], 1 - 0.1 * 1, 1e-15);
    Vec mixed = rprime_step({5, 1, 1}, M, v1, 0.1);
    EXPECT_NEAR(mixed[0], 5.0, 1e-15);
}

TEST(Tracker, FirstOrderFlowLimit) {
    auto c = small_cfg();
    auto ds = build_dataset(c);
    auto net = build_twolayer(c, ds);
    for (int k = 0; k < 3; ++k) net = gd_step(net, ds, 0.3);
    const double eta = 1e-8;
    auto s0 = evaluate(net, ds);
    auto s1 = evaluate(gd_step(s0, ds, eta), ds);
    Vec MD = matvec(step_matrices(s0, ds, eta).M, s0.D);
    auto fe = first_order_errors(s0.D, s1.D, MD, norm2_change(s0.net.A, s1.net.A), s0.DtF, eta);
    EXPECT_LE(fe.foErrD, 1e-6);
    EXPECT_LE(fe.foErrA, 1e-6);
}

TEST(Tracker, FirstOrderClosedForm) {
    auto c = small_cfg();
    auto ds = build_dataset(c);
    auto net = build_twolayer(c, ds);
    const double eta = resolve_eta(c, ds);
    for (int k = 0; k < 5; ++k) net = gd_step(net, ds, eta);
    auto s0 = evaluate(net, ds);
    auto s1 = evaluate(gd_step(s0, ds, eta), ds);
    Vec MD = matvec(step_matrices(s0, ds, eta).M, s0.D);
    auto fe = first_order_errors(s0.D, s1.D, MD, norm2_change(s0.net.A, s1.net.A), s0.DtF, eta);
    const double n = 40, m = 40;
    Vec hot = matvec(ds.gram(), s0.D);
    double want = std::fabs(4.0 * eta * eta / (n * n * m) * s0.DtF) * norm(hot) / (eta * norm(MD));
    EXPECT_NEAR(fe.foErrD, want, 1e-8 * want);
}

TEST(Tracker, DeadZoneSigns) {
    EXPECT_EQ(dead_sign(1.0, 1.0), 1);
    EXPECT_EQ(dead_sign(-1.0, 1.0), -1);
    EXPECT_EQ(dead_sign(1e-14, 1.0), 0);
    EXPECT_EQ(dead_sign(1e-9, 1e6), 0);
    EXPECT_TRUE(is_anomaly(0.1, 1.0, -0.1, 1.0));
    EXPECT_FALSE(is_anomaly(0.1, 1.0, 0.1, 1.0));
    EXPECT_FALSE(is_anomaly(0.1, 1.0, 0.0, 1.0));
}

TEST(Tracker, EtaResolution) {
    auto c = small_cfg();
    auto ds = build_dataset(c);
    double l0 = 0;
    double eta = resolve_eta(c, ds, &l0);
    EXPECT_NEAR(l0, initial_sharpness(ds), 1e-8 * l0);
    EXPECT_NEAR(eta, 0.8 * 2.0 / l0, 1e-12);
    c.eta = 0.25;
    EXPECT_EQ(resolve_eta(c, ds), 0.25);
}

TEST(Tracker, RunShapeAndSharpening) {
    auto c = small_cfg();
    auto res = run(c);
    ASSERT_FALSE(res.diverged);
    ASSERT_EQ(res.records.size(), c.steps);
    ASSERT_EQ(res.diag.size(), c.steps);
    for (std::size_t t = 0; t < res.records.size(); ++t) EXPECT_EQ(res.records[t].t, t);
    const auto& r0 = res.records.front();
    EXPECT_NEAR(r0.lambda1, 2.0 * res.ds.lambdas.front() * 11.0 / (40.0 * 10.0), 1e-8 * r0.lambda1);
    EXPECT_EQ(r0.DtF, 0.0);
    EXPECT_NEAR(r0.loss, 1.0, 1e-12);
    // grows past its start and reaches 2/eta
    std::size_t cross = 0;
    for (std::size_t t = 1; t < res.records.size() && !cross; ++t)
        if (res.records[t].lambda1 >= res.records[t].twoOverEta) cross = t;
    ASSERT_GT(cross, 0u);
    EXPECT_GT(res.records[cross - 1].lambda1, r0.lambda1);
    for (const auto& d : res.diag) {
        EXPECT_LE(d.resResidual, 1e-9);
        EXPECT_LE(d.resGram, 1e-9);
    }
}

TEST(Tracker, SmallStepSharpensMonotonically) {
    // eta*lambda1 < 1 so the top residual mode never flips sign
    auto c = small_cfg();
    c.eta_fraction = 0.45;
    auto res = run(c);
    ASSERT_FALSE(res.diverged);
    for (std::size_t t = 1; t < res.records.size(); ++t)
        EXPECT_GE(res.records[t].lambda1, res.records[t - 1].lambda1 * (1 - 1e-12)) << "t=" << t;
    EXPECT_GT(res.records.back().lambda1, 1.3 * res.records.front().lambda1);
    EXPECT_LT(res.records.back().loss, 1e-10);
}

TEST(Tracker, RunIsDeterministic) {
    auto c = small_cfg();
    c.steps = 60;
    auto a = run(c), b = run(c);
    auto pa = tmp_path("a.csv"), pb = tmp_path("b.csv");
    write_trajectory_csv(pa, a.records);
    write_trajectory_csv(pb, b.records);
    EXPECT_EQ(slurp(pa), slurp(pb));
    c.seed = 4;
    auto other = run(c);
    write_trajectory_csv(pb, other.records);
    EXPECT_NE(slurp(pa), slurp(pb));
    fs::remove(pa);
    fs::remove(pb);
}

TEST(Tracker, MlpRun) {
    RunConfig c;
    c.model = ModelKind::Mlp;
    c.hidden = {16, 16};
    c.activation = Activation::Tanh;
    c.eta_fraction = 0.5;
    c.init_scale = 3;
    c.steps = 40;
    c.data.n = 20;
    c.data.d = 30;
    c.data.rank = 20;
    c.data.top = 20;
    c.data.labels = "random_sign";
    c.dfpos_trials = 10;
    auto res = run(c);
    ASSERT_FALSE(res.diverged);
    ASSERT_EQ(res.records.size(), 40u);
    EXPECT_LT(res.records.back().loss, res.records.front().loss);
    EXPECT_TRUE(std::isnan(res.records[0].GammaNorm));
    for (const auto& d : res.diag) EXPECT_TRUE(std::isfinite(d.maLambda1));
}

TEST(Tracker, DivergenceStops) {
    auto c = small_cfg();
    c.eta_fraction = 3.0;
    c.steps = 400;
    auto res = run(c);
    EXPECT_TRUE(res.diverged);
    EXPECT_LT(res.divergedAt, 400u);
    EXPECT_FALSE(res.notices.empty());
}

TEST(Tracker, CsvRoundTrip) {
    auto c = small_cfg();
    c.steps = 30;
    auto res = run(c);
    auto p = tmp_path("rt.csv");
    write_trajectory_csv(p, res.records);
    auto back = read_trajectory_csv(p);
    ASSERT_EQ(back.size(), res.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        EXPECT_EQ(back[i].loss, res.records[i].loss);
        EXPECT_EQ(back[i].lambda1, res.records[i].lambda1);
        EXPECT_EQ(back[i].RdiffNorm, res.records[i].RdiffNorm);
        EXPECT_EQ(back[i].anomaly, res.records[i].anomaly);
    }
    auto head = slurp(p).substr(0, slurp(p).find('\n'));
    EXPECT_EQ(head,
              "t,loss,lambda1,lambda2,lambda_star,two_over_eta,anorm2,dtf,dtv1,rnorm2,rprime_norm2,rdiff_norm,"
              "gamma_norm,v1_drift,anomaly,fo_err_d,fo_err_a,alpha_margin");
    auto pd = tmp_path("rt_diag.csv");
    write_diagnostics_csv(pd, res.diag, 0);
    auto dback = read_diagnostics_csv(pd);
    ASSERT_EQ(dback.size(), res.diag.size());
    EXPECT_EQ(dback[3].resKey, res.diag[3].resKey);
    fs::remove(p);
    fs::remove(pd);
}

TEST(Tracker, CsvSchemaErrors) {
    auto p = tmp_path("bad.csv");
    {
        std::ofstream f(p);
        f << "t,loss,lambda1\n0,1,2\n";
    }
    try {
        read_trajectory_csv(p);
        FAIL();
    } catch (const SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("lambda2"), std::string::npos);
    }
    auto c = small_cfg();
    c.steps = 5;
    write_trajectory_csv(p, run(c).records);
    auto text = slurp(p);
    {
        std::ofstream f(p);
        f << text.substr(0, text.size() - 20);
    }
    EXPECT_THROW(read_trajectory_csv(p), SchemaError);
    fs::remove(p);
}

TEST(Tracker, FormatDouble) {
    EXPECT_EQ(format_double(0.5), "0.5");
    EXPECT_EQ(format_double(std::nan("")), "nan");
    EXPECT_EQ(std::stod(format_double(0.1)), 0.1);
    EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}
