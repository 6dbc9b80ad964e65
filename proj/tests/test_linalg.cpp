#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "eoslab/linalg.hpp"

using namespace eos;

namespace {

Matrix random_sym(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix S(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) S(i, j) = S(j, i) = g(rng);
    return S;
}

Matrix random_psd(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Matrix B(n, n);
    for (auto& v : B.a) v = g(rng);
    return matmul_tn(B, B);
}

double recon_err(const Matrix& S, const EigenResult& e) {
    Matrix R(S.rows, S.cols);
    for (std::size_t k = 0; k < e.values.size(); ++k)
        for (std::size_t i = 0; i < S.rows; ++i)
            for (std::size_t j = 0; j < S.cols; ++j) R(i, j) += e.values[k] * e.vectors(i, k) * e.vectors(j, k);
    return frob_norm(lincomb(1.0, S, -1.0, R));
}

}  // namespace

TEST(SymEig, Identity) {
    auto e = sym_eig(Matrix::identity(4));
    for (double v : e.values) EXPECT_NEAR(v, 1.0, 1e-15);
}

TEST(SymEig, Diagonal) {
    auto e = sym_eig(Matrix::diag({1.0, 3.0}));
    EXPECT_DOUBLE_EQ(e.values[0], 3.0);
    EXPECT_DOUBLE_EQ(e.values[1], 1.0);
    EXPECT_NEAR(std::fabs(e.vectors(1, 0)), 1.0, 1e-15);
    EXPECT_NEAR(std::fabs(e.vectors(0, 1)), 1.0, 1e-15);
}

TEST(SymEig, Reconstruction6x6) {
    std::mt19937_64 rng(3);
    Matrix S = random_sym(6, rng);
    auto e = sym_eig(S);
    EXPECT_LE(recon_err(S, e), 1e-10 * frob_norm(S));
    for (std::size_t i = 0; i + 1 < 6; ++i) EXPECT_GE(e.values[i], e.values[i + 1]);
}

TEST(SymEig, OrthonormalAndResidual) {
    std::mt19937_64 rng(11);
    Matrix S = random_sym(40, rng);
    auto e = sym_eig(S);
    Matrix VtV = matmul_tn(e.vectors, e.vectors);
    EXPECT_LE(frob_norm(lincomb(1.0, VtV, -1.0, Matrix::identity(40))), 1e-8);
    double s = sym_spectral_norm(S);
    for (std::size_t i = 0; i < 40; ++i) {
        Vec v = e.vec(i);
        EXPECT_LE(norm(lincomb(1.0, matvec(S, v), -e.values[i], v)), 1e-8 * s);
    }
}

TEST(SymEig, TraceProperty) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 25; ++trial) {
        std::size_t n = 2 + trial % 15;
        Matrix S = random_sym(n, rng);
        auto e = sym_eig(S);
        double sum = 0.0;
        for (double v : e.values) sum += v;
        EXPECT_NEAR(sum, trace(S), 1e-9 * frob_norm(S));
        EXPECT_LE(recon_err(S, e), 1e-9 * frob_norm(S));
    }
}

TEST(SymEig, RejectsBadInput) {
    EXPECT_THROW(sym_eig(Matrix(2, 3)), std::invalid_argument);
    Matrix A(2, 2);
    A(0, 1) = 1.0;
    EXPECT_THROW(sym_eig(A), std::invalid_argument);
}

TEST(TopK, Diagonal) {
    auto e = top_k_eig(Matrix::diag({5.0, 2.0, 1.0}), 2);
    ASSERT_EQ(e.values.size(), 2u);
    EXPECT_NEAR(e.values[0], 5.0, 1e-10 * 5);
    EXPECT_NEAR(e.values[1], 2.0, 1e-10 * 5);
}

TEST(TopK, Degenerate) {
    auto e = top_k_eig(Matrix::diag({5.0, 5.0, 1.0}), 2);
    EXPECT_NEAR(e.values[0], 5.0, 1e-9);
    EXPECT_NEAR(e.values[1], 5.0, 1e-9);
    Vec a = e.vec(0), b = e.vec(1);
    EXPECT_NEAR(dot(a, b), 0.0, 1e-10);
    EXPECT_NEAR(a[2], 0.0, 1e-6);
    EXPECT_NEAR(b[2], 0.0, 1e-6);
}

TEST(TopK, MatchesFullEigOnRandomPsd) {
    std::mt19937_64 rng(17);
    Matrix S = random_psd(50, rng);
    auto full = sym_eig(S);
    auto top = top_k_eig(S, 2, 1e-10, 10000);
    EXPECT_LE(std::fabs(top.values[0] - full.values[0]), 1e-10 * full.values[0]);
    EXPECT_LE(std::fabs(top.values[1] - full.values[1]), 1e-10 * full.values[0]);
}

TEST(TopK, Top1Over100RandomPsd) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        Matrix S = random_psd(4 + trial % 20, rng);
        auto full = sym_eig(S);
        auto top = top_k_eig(S, 1);
        EXPECT_LE(std::fabs(top.values[0] - full.values[0]), 1e-10 * full.values[0]) << trial;
    }
}

TEST(TopK, ReportsNonConvergence) {
    std::mt19937_64 rng(29);
    Matrix S = random_psd(30, rng);
    try {
        top_k_eig(S, 3, 1e-14, 2);
        FAIL() << "expected non-convergence";
    } catch (const EigenNonConvergence& e) {
        EXPECT_GE(e.residual, 0.0);
    }
}

TEST(TopK, RejectsBadK) {
    EXPECT_THROW(top_k_eig(Matrix::identity(3), 0), std::invalid_argument);
    EXPECT_THROW(top_k_eig(Matrix::identity(3), 4), std::invalid_argument);
}

TEST(Orthonormal, Square) {
    Matrix Q = orthonormal_columns(3, 3, 1);
    EXPECT_LE(frob_norm(lincomb(1.0, matmul_tn(Q, Q), -1.0, Matrix::identity(3))), 1e-12);
}

TEST(Orthonormal, Tall) {
    Matrix Q = orthonormal_columns(10, 4, 2);
    Matrix G = matmul_tn(Q, Q);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(G(i, j), i == j ? 1.0 : 0.0, 1e-12);
}

TEST(Orthonormal, Deterministic) {
    EXPECT_EQ(orthonormal_columns(7, 5, 42), orthonormal_columns(7, 5, 42));
    EXPECT_NE(orthonormal_columns(7, 5, 42), orthonormal_columns(7, 5, 43));
    EXPECT_THROW(orthonormal_columns(2, 3, 1), std::invalid_argument);
}

TEST(Duality, GramAndFisherShareSpectrum) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g;
    for (auto [n, p] : {std::pair<std::size_t, std::size_t>{12, 5}, {6, 15}, {20, 20}}) {
        Matrix J(n, p);
        for (auto& v : J.a) v = g(rng);
        Matrix K = matmul_nt(J, J), F = matmul_tn(J, J);
        for (auto& v : K.a) v *= 2.0 / n;
        for (auto& v : F.a) v *= 2.0 / n;
        auto ek = sym_eig(K), ef = sym_eig(F);
        std::size_t rk = std::min(n, p);
        for (std::size_t i = 0; i < rk; ++i)
            EXPECT_NEAR(ek.values[i], ef.values[i], 1e-8 * ek.values[0]);
    }
}

TEST(SymEigvals, MatchesJacobi) {
    std::mt19937_64 rng(41);
    for (std::size_t n : {1u, 2u, 3u, 7u, 30u, 64u}) {
        Matrix S = random_sym(n, rng);
        auto full = sym_eig(S);
        Vec fast = sym_eigvals(S);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(fast[i], full.values[i], 1e-10 * (1 + std::fabs(full.values[0])));
    }
    Vec z = sym_eigvals(Matrix(5, 5));
    for (double v : z) EXPECT_EQ(v, 0.0);
    Vec dg = sym_eigvals(Matrix::diag({2.0, -7.0, 5.0}));
    EXPECT_DOUBLE_EQ(dg[0], 5.0);
    EXPECT_DOUBLE_EQ(dg[2], -7.0);
    EXPECT_DOUBLE_EQ(sym_spectral_norm(Matrix::diag({2.0, -7.0, 5.0})), 7.0);
}
