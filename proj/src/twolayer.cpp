#include "eoslab/twolayer.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace eos {

TwoLayerNet init_symmetric(std::size_t m, std::size_t d, std::uint64_t seed, double w_scale) {
    if (m % 2 != 0) throw std::invalid_argument("width m must be even");
    if (m / 2 < d) throw std::invalid_argument("symmetric init needs m/2 >= d");
    const std::size_t h = m / 2;
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    TwoLayerNet net;
    net.A.resize(m);
    for (std::size_t q = 0; q < h; ++q) {
        net.A[q] = coin(rng) ? 1.0 : -1.0;
        net.A[q + h] = -net.A[q];
    }
    Matrix Q = orthonormal_columns(h, d, rng());
    double s = std::sqrt(double(m) / (2.0 * double(d))) * w_scale;
    net.W = Matrix(m, d);
    net.w_scale = w_scale;
    for (std::size_t q = 0; q < h; ++q)
        for (std::size_t j = 0; j < d; ++j) net.W(q, j) = net.W(q + h, j) = s * Q(q, j);
    return net;
}

Vec forward(const TwoLayerNet& net, const Matrix& X) {
    if (X.rows != net.d()) throw std::invalid_argument("forward: X must have d rows");
    // W^T A, summed over mirrored pairs (q, q + m/2) so symmetric init cancels exactly
    const std::size_t m = net.m(), h = m / 2;
    Vec u(net.d(), 0.0);
    for (std::size_t q = 0; q < h; ++q) {
        const double* w0 = net.W.row(q);
        const double* w1 = net.W.row(q + h);
        for (std::size_t j = 0; j < net.d(); ++j) u[j] += w0[j] * net.A[q] + w1[j] * net.A[q + h];
    }
    if (m % 2)
        for (std::size_t j = 0; j < net.d(); ++j) u[j] += net.W(m - 1, j) * net.A[m - 1];
    Vec F = matvec_t(X, u);
    double s = 1.0 / std::sqrt(double(net.m()));
    for (auto& f : F) f *= s;
    return F;
}

TwoLayerState evaluate(const TwoLayerNet& net, const Dataset& ds) {
    TwoLayerState s;
    s.net = net;
    s.F = forward(net, ds.X);
    s.D = lincomb(1.0, s.F, -1.0, ds.Y);
    s.WtW = matmul_tn(net.W, net.W);
    s.anorm2 = dot(net.A, net.A);
    s.DtF = dot(s.D, s.F);
    return s;
}

TwoLayerNet gd_step(const TwoLayerState& s, const Dataset& ds, double eta) {
    if (!(eta > 0)) throw std::invalid_argument("eta must be positive");
    const auto& net = s.net;
    const double n = double(ds.n()), m = double(net.m());
    const double c = 2.0 * eta / (n * std::sqrt(m));
    Vec g = matvec(ds.X, s.D);  // X D
    Vec WXD = matvec(net.W, g);
    TwoLayerNet out = net;
    for (std::size_t q = 0; q < net.m(); ++q) {
        out.A[q] -= c * WXD[q];
        double cq = c * net.A[q];
        double* w = out.W.row(q);
        for (std::size_t j = 0; j < net.d(); ++j) w[j] -= cq * g[j];
    }
    return out;
}

TwoLayerNet gd_step(const TwoLayerNet& net, const Dataset& ds, double eta) {
    return gd_step(evaluate(net, ds), ds, eta);
}

bool diverged(const TwoLayerState& s, const Dataset& ds) {
    if (!all_finite(s.net.A) || !all_finite(s.net.W) || !all_finite(s.D)) return true;
    double loss = dot(s.D, s.D) / double(ds.n());
    return !std::isfinite(loss) || loss > 1e12;
}

Matrix core_M(const TwoLayerState& s, std::size_t n) {
    const double m = double(s.net.m());
    Matrix H = s.WtW;
    for (std::size_t i = 0; i < H.rows; ++i) H(i, i) += s.anorm2;
    double c = 2.0 / (m * double(n));
    for (auto& v : H.a) v *= c;
    return H;
}

Matrix core_Mstar(const TwoLayerState& s, std::size_t n, double eta) {
    Matrix H = core_M(s, n);
    const double m = double(s.net.m()), nn = double(n);
    double shift = 4.0 * eta / (nn * nn * m) * s.DtF;
    for (std::size_t i = 0; i < H.rows; ++i) H(i, i) -= shift;
    return H;
}

Matrix core_Gamma(const TwoLayerState& s, std::size_t n) {
    const double m = double(s.net.m());
    Matrix H = s.WtW;
    for (std::size_t i = 0; i < H.rows; ++i) H(i, i) -= s.net.kernel0();
    double c = 2.0 / (m * double(n));
    for (auto& v : H.a) v *= c;
    return H;
}

Matrix expand_core(const Dataset& ds, const Matrix& core) { return matmul_tn(ds.X, matmul(core, ds.X)); }

Vec apply_core(const Dataset& ds, const Matrix& core, const Vec& x) {
    return matvec_t(ds.X, matvec(core, matvec(ds.X, x)));
}

Matrix reduce_core(const Dataset& ds, const Matrix& core) {
    Matrix R = matmul_tn(ds.XV, matmul(core, ds.XV));
    for (std::size_t i = 0; i < R.rows; ++i)
        for (std::size_t j = i + 1; j < R.cols; ++j) R(i, j) = R(j, i) = 0.5 * (R(i, j) + R(j, i));
    return R;
}

double lambda_star(const Matrix& M, const Dataset& ds) {
    Vec v1 = ds.v(0);
    return dot(v1, matvec(M, v1));
}

StepMatrices step_matrices(const TwoLayerState& s, const Dataset& ds, double eta) {
    StepMatrices sm;
    const std::size_t n = ds.n();
    sm.M = expand_core(ds, core_M(s, n));
    sm.DtF = s.DtF;
    const double m = double(s.net.m()), nn = double(n);
    sm.Mstar = lincomb(1.0, sm.M, -4.0 * eta / (nn * nn * m) * s.DtF, ds.XtX);
    sm.Gamma = expand_core(ds, core_Gamma(s, n));
    sm.lambdaStar = lambda_star(sm.M, ds);
    return sm;
}

StepMatrices step_matrices(const TwoLayerNet& net, const Dataset& ds, double eta) {
    return step_matrices(evaluate(net, ds), ds, eta);
}

double gamma_norm(const TwoLayerState& s, const Dataset& ds) {
    if (ds.r() == 0) return 0.0;
    return sym_spectral_norm(reduce_core(ds, core_Gamma(s, ds.n())));
}

double mstar_lambda_max(const TwoLayerState& s, const Dataset& ds, double eta) {
    if (ds.r() == 0) return 0.0;
    return sym_eigvals(reduce_core(ds, core_Mstar(s, ds.n(), eta))).front();
}

double restricted_lambda_min(const TwoLayerState& s, const Dataset& ds) {
    if (ds.r() == 0) return 0.0;
    return sym_eigvals(reduce_core(ds, core_M(s, ds.n()))).back();
}

double check_residual_update(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState& s1, double eta) {
    Vec MsD = apply_core(ds, core_Mstar(s0, ds.n(), eta), s0.D);
    Vec pred = lincomb(1.0, s0.D, -eta, MsD);
    return norm(lincomb(1.0, s1.D, -1.0, pred)) / std::max(norm(s0.D), 1.0);
}

double check_gram_update(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState& s1, double eta) {
    const std::size_t nz = ds.n();
    double scale = sym_spectral_norm(reduce_core(ds, core_M(s0, nz)));
    return check_gram_update(ds, s0, s1, eta, expand_core(ds, core_M(s0, nz)), expand_core(ds, core_M(s1, nz)),
                             scale);
}

double check_gram_update(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState&, double eta,
                         const Matrix& M0, const Matrix& M1, double scale) {
    const std::size_t nz = ds.n();
    const double n = double(nz), m = double(s0.net.m());
    const Matrix& K = ds.XtX;
    const Vec& D = s0.D;
    const Vec& F = s0.F;
    Vec KD = matvec(K, D);
    Vec g = matvec(ds.X, D);
    double gWg = dot(g, matvec(s0.WtW, g));

    double c1 = -4.0 * eta / (n * n * m);
    double c2 = 8.0 * eta * eta / (n * n * n * m * m);
    Matrix diff = lincomb(1.0, M1, -1.0, M0);
    double kscale = c1 * 2.0 * s0.DtF + c2 * gWg;
    for (std::size_t i = 0; i < nz; ++i) {
        double* row = diff.row(i);
        const double* kr = K.row(i);
        for (std::size_t j = 0; j < nz; ++j) {
            double rhs = kscale * kr[j] + c1 * (F[i] * KD[j] + KD[i] * F[j]) + c2 * s0.anorm2 * KD[i] * KD[j];
            row[j] -= rhs;
        }
    }
    return frob_norm(diff) / std::max(scale, 1e-300);
}

double key_equation_rhs(const Dataset& ds, const TwoLayerState& s, double eta) {
    const std::size_t nz = ds.n();
    const double n = double(nz), m = double(s.net.m());
    const double lam1 = ds.lambdas.front();
    Vec v1 = ds.v(0);
    const Vec& D = s.D;
    const Vec& F = s.F;
    Matrix HM = core_M(s, nz), HG = core_Gamma(s, nz);
    Vec Xv = matvec(ds.X, v1);
    double Ls = dot(Xv, matvec(HM, Xv));
    double Dv = dot(D, v1), Fv = dot(F, v1);
    Vec R = lincomb(1.0, D, -Dv, v1);
    Vec XR = matvec(ds.X, R);
    Vec HGXR = matvec(HG, XR);
    double RGR = dot(XR, HGXR);
    double vGR = dot(Xv, HGXR);
    double RKR = dot(XR, XR);
    double B = s.DtF + Fv * Dv - 0.5 * eta * Dv * Dv * Ls - 0.5 * eta * RGR - eta * Dv * vGR -
               eta / (m * n) * s.net.kernel0() * RKR;
    return -8.0 * eta * lam1 / (m * n * n) * B;
}

double lambda_star_core(const Dataset& ds, const Matrix& core) {
    Vec Xv = matvec(ds.X, ds.v(0));
    return dot(Xv, matvec(core, Xv));
}

double check_key_equation(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState& s1, double eta) {
    const std::size_t nz = ds.n();
    double L0 = lambda_star_core(ds, core_M(s0, nz));
    double L1 = lambda_star_core(ds, core_M(s1, nz));
    double rhs = key_equation_rhs(ds, s0, eta);
    return std::fabs((L1 - L0) - rhs) / std::max(std::fabs(L0), 1.0);
}

InterpolationResult check_interpolation(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState& s1,
                                        double eta) {
    const std::size_t nz = ds.n();
    Matrix H0 = core_M(s0, nz);
    Matrix E = lincomb(1.0, core_Mstar(s0, nz, eta), -1.0, H0);
    Matrix Dl = lincomb(1.0, core_M(s1, nz), -1.0, H0);
    Matrix Er = reduce_core(ds, E), Dr = reduce_core(ds, Dl);
    InterpolationResult out;
    double dd = frob_dot(Dr, Dr);
    out.ks = dd > 0 ? frob_dot(Er, Dr) / dd : 0.0;
    out.ks_in_unit = out.ks >= 0.0 && out.ks < 1.0;
    out.residual = ds.r() == 0 ? 0.0 : sym_spectral_norm(lincomb(1.0, Er, -out.ks, Dr));
    return out;
}

double check_anorm_update(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState& s1, double eta) {
    const double n = double(ds.n()), m = double(s0.net.m());
    Vec g = matvec(ds.X, s0.D);
    Vec WXD = matvec(s0.net.W, g);
    double gradA2 = dot(WXD, WXD) * 4.0 / (n * n * m);
    double pred = -4.0 * eta / n * s0.DtF + eta * eta * gradA2;
    return std::fabs((s1.anorm2 - s0.anorm2) - pred) / std::max(s0.anorm2, 1.0);
}

double initial_sharpness(const Dataset& ds) {
    const double n = double(ds.n()), d = double(ds.d());
    return 2.0 * ds.lambdas.front() * (d + 1.0) / (n * d);
}

double eta_max(const Dataset& ds) {
    const double n = double(ds.n()), d = double(ds.d());
    return n * d / ((d + 1.0) * ds.lambdas.front());
}

double eta_from_fraction(const Dataset& ds, double frac) { return frac * 2.0 / initial_sharpness(ds); }

}  // namespace eos
