#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eos {

using Vec = std::vector<double>;

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
    double* row(std::size_t i) { return a.data() + i * cols; }
    const double* row(std::size_t i) const { return a.data() + i * cols; }

    Vec col(std::size_t j) const;
    void set_col(std::size_t j, const Vec& v);

    static Matrix identity(std::size_t n);
    static Matrix diag(const Vec& d);

    bool operator==(const Matrix& o) const = default;
};

// values descending, vectors stored as columns
struct EigenResult {
    Vec values;
    Matrix vectors;
    Vec vec(std::size_t i) const { return vectors.col(i); }
};

struct EigenNonConvergence : std::runtime_error {
    std::size_t index;
    double residual;
    EigenNonConvergence(std::size_t idx, double res);
};

Matrix transpose(const Matrix& A);
Matrix matmul(const Matrix& A, const Matrix& B);
Matrix matmul_tn(const Matrix& A, const Matrix& B);  // A^T B
Matrix matmul_nt(const Matrix& A, const Matrix& B);  // A B^T
Vec matvec(const Matrix& A, const Vec& x);
Vec matvec_t(const Matrix& A, const Vec& x);  // A^T x
Matrix lincomb(double alpha, const Matrix& A, double beta, const Matrix& B);
Matrix outer(const Vec& x, const Vec& y);

double dot(const Vec& x, const Vec& y);
double norm(const Vec& x);
Vec lincomb(double alpha, const Vec& x, double beta, const Vec& y);
Vec scaled(const Vec& x, double s);

double frob_norm(const Matrix& A);
double frob_dot(const Matrix& A, const Matrix& B);
double trace(const Matrix& A);
bool all_finite(const Matrix& A);
bool all_finite(const Vec& x);

// throws std::invalid_argument when not square or not symmetric to rel_tol
void require_symmetric(const Matrix& S, double rel_tol = 1e-10);

EigenResult sym_eig(const Matrix& S);
EigenResult top_k_eig(const Matrix& S, std::size_t k, double tol = 1e-10, std::size_t max_iter = 10000);

// eigenvalues only, descending; Householder tridiagonalization + implicit QL
Vec sym_eigvals(const Matrix& S);

// largest |eigenvalue| of a symmetric matrix
double sym_spectral_norm(const Matrix& S);

Matrix orthonormal_columns(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace eos
