#pragma once

#include <cstdint>

#include "eoslab/dataset.hpp"
#include "eoslab/linalg.hpp"

namespace eos {

// f(x) = A^T W x / sqrt(m)
struct TwoLayerNet {
    Vec A;     // m
    Matrix W;  // m x d
    double w_scale = 1.0;  // init W^T W = w_scale^2 (m/d) I
    std::size_t m() const { return A.size(); }
    double kernel0() const { return w_scale * w_scale * double(m()) / double(d()); }
    std::size_t d() const { return W.cols; }
};

// everything about a net that the update rules need, evaluated once
struct TwoLayerState {
    TwoLayerNet net;
    Vec F;
    Vec D;
    Matrix WtW;  // d x d
    double anorm2 = 0.0;
    double DtF = 0.0;
};

struct StepMatrices {
    Matrix M;
    Matrix Mstar;
    Matrix Gamma;
    double lambdaStar = 0.0;
    double DtF = 0.0;
};

struct InterpolationResult {
    double ks = 0.0;
    double residual = 0.0;
    bool ks_in_unit = true;  // ks in [0, 1)
};

TwoLayerNet init_symmetric(std::size_t m, std::size_t d, std::uint64_t seed, double w_scale = 1.0);
Vec forward(const TwoLayerNet& net, const Matrix& X);
TwoLayerState evaluate(const TwoLayerNet& net, const Dataset& ds);
TwoLayerNet gd_step(const TwoLayerNet& net, const Dataset& ds, double eta);
TwoLayerNet gd_step(const TwoLayerState& s, const Dataset& ds, double eta);
bool diverged(const TwoLayerState& s, const Dataset& ds);

// d x d cores H with M = X^T H X etc.
Matrix core_M(const TwoLayerState& s, std::size_t n);
Matrix core_Mstar(const TwoLayerState& s, std::size_t n, double eta);
Matrix core_Gamma(const TwoLayerState& s, std::size_t n);
Matrix expand_core(const Dataset& ds, const Matrix& core);  // X^T H X
Matrix reduce_core(const Dataset& ds, const Matrix& core);  // (XV)^T H (XV)
Vec apply_core(const Dataset& ds, const Matrix& core, const Vec& x);  // X^T H X x
double lambda_star_core(const Dataset& ds, const Matrix& core);

StepMatrices step_matrices(const TwoLayerState& s, const Dataset& ds, double eta);
StepMatrices step_matrices(const TwoLayerNet& net, const Dataset& ds, double eta);

double lambda_star(const Matrix& M, const Dataset& ds);
double gamma_norm(const TwoLayerState& s, const Dataset& ds);
double mstar_lambda_max(const TwoLayerState& s, const Dataset& ds, double eta);
// smallest eigenvalue of M restricted to the column space of X^T X
double restricted_lambda_min(const TwoLayerState& s, const Dataset& ds);

double check_residual_update(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState& s1, double eta);
double check_gram_update(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState& s1, double eta);
// same, reusing M(t), M(t+1) and ||M(t)||
double check_gram_update(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState& s1, double eta,
                         const Matrix& M0, const Matrix& M1, double scale);
double check_key_equation(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState& s1, double eta);
InterpolationResult check_interpolation(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState& s1,
                                        double eta);
double check_anorm_update(const Dataset& ds, const TwoLayerState& s0, const TwoLayerState& s1, double eta);

// six-term bracket of the sharpness-surrogate recursion
double key_equation_rhs(const Dataset& ds, const TwoLayerState& s, double eta);

double initial_sharpness(const Dataset& ds);  // 2 lambda1 (d+1) / (n d)
double eta_max(const Dataset& ds);            // n d / ((d+1) lambda1)
double eta_from_fraction(const Dataset& ds, double frac);

}  // namespace eos
