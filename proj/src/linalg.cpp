#include "eoslab/linalg.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace eos {

Vec Matrix::col(std::size_t j) const {
    Vec v(rows);
    for (std::size_t i = 0; i < rows; ++i) v[i] = (*this)(i, j);
    return v;
}

void Matrix::set_col(std::size_t j, const Vec& v) {
    for (std::size_t i = 0; i < rows; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::identity(std::size_t n) {
    Matrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
}

Matrix Matrix::diag(const Vec& d) {
    Matrix D(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) D(i, i) = d[i];
    return D;
}

static std::string nonconv_msg(std::size_t idx, double res) {
    std::ostringstream os;
    os << "power iteration did not converge for eigenpair " << idx << " (residual " << res << ")";
    return os.str();
}

EigenNonConvergence::EigenNonConvergence(std::size_t idx, double res)
    : std::runtime_error(nonconv_msg(idx, res)), index(idx), residual(res) {}

Matrix transpose(const Matrix& A) {
    Matrix T(A.cols, A.rows);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
    return T;
}

Matrix matmul(const Matrix& A, const Matrix& B) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    Matrix C(A.rows, B.cols);
    for (std::size_t i = 0; i < A.rows; ++i) {
        double* c = C.row(i);
        const double* ar = A.row(i);
        for (std::size_t k = 0; k < A.cols; ++k) {
            double aik = ar[k];
            if (aik == 0.0) continue;
            const double* b = B.row(k);
            for (std::size_t j = 0; j < B.cols; ++j) c[j] += aik * b[j];
        }
    }
    return C;
}

Matrix matmul_tn(const Matrix& A, const Matrix& B) {
    if (A.rows != B.rows) throw std::invalid_argument("matmul_tn: row counts differ");
    Matrix C(A.cols, B.cols);
    for (std::size_t k = 0; k < A.rows; ++k) {
        const double* ar = A.row(k);
        const double* b = B.row(k);
        for (std::size_t i = 0; i < A.cols; ++i) {
            double aki = ar[i];
            if (aki == 0.0) continue;
            double* c = C.row(i);
            for (std::size_t j = 0; j < B.cols; ++j) c[j] += aki * b[j];
        }
    }
    return C;
}

Matrix matmul_nt(const Matrix& A, const Matrix& B) {
    if (A.cols != B.cols) throw std::invalid_argument("matmul_nt: column counts differ");
    Matrix C(A.rows, B.rows);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* ar = A.row(i);
        for (std::size_t j = 0; j < B.rows; ++j) {
            const double* br = B.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < A.cols; ++k) s += ar[k] * br[k];
            C(i, j) = s;
        }
    }
    return C;
}

Vec matvec(const Matrix& A, const Vec& x) {
    if (A.cols != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    Vec y(A.rows, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* ar = A.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols; ++j) s += ar[j] * x[j];
        y[i] = s;
    }
    return y;
}

Vec matvec_t(const Matrix& A, const Vec& x) {
    if (A.rows != x.size()) throw std::invalid_argument("matvec_t: dimension mismatch");
    Vec y(A.cols, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i) {
        const double* ar = A.row(i);
        double xi = x[i];
        for (std::size_t j = 0; j < A.cols; ++j) y[j] += ar[j] * xi;
    }
    return y;
}

Matrix lincomb(double alpha, const Matrix& A, double beta, const Matrix& B) {
    if (A.rows != B.rows || A.cols != B.cols) throw std::invalid_argument("lincomb: shape mismatch");
    Matrix C(A.rows, A.cols);
    for (std::size_t i = 0; i < A.a.size(); ++i) C.a[i] = alpha * A.a[i] + beta * B.a[i];
    return C;
}

Matrix outer(const Vec& x, const Vec& y) {
    Matrix C(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j) C(i, j) = x[i] * y[j];
    return C;
}

double dot(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double norm(const Vec& x) { return std::sqrt(dot(x, x)); }

Vec lincomb(double alpha, const Vec& x, double beta, const Vec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("lincomb: length mismatch");
    Vec z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = alpha * x[i] + beta * y[i];
    return z;
}

Vec scaled(const Vec& x, double s) {
    Vec z(x);
    for (auto& v : z) v *= s;
    return z;
}

double frob_norm(const Matrix& A) { return std::sqrt(frob_dot(A, A)); }

double frob_dot(const Matrix& A, const Matrix& B) {
    if (A.a.size() != B.a.size()) throw std::invalid_argument("frob_dot: shape mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < A.a.size(); ++i) s += A.a[i] * B.a[i];
    return s;
}

double trace(const Matrix& A) {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(A.rows, A.cols); ++i) s += A(i, i);
    return s;
}

bool all_finite(const Matrix& A) { return all_finite(A.a); }

bool all_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

void require_symmetric(const Matrix& S, double rel_tol) {
    if (S.rows != S.cols) {
        std::ostringstream os;
        os << "expected a square matrix, got " << S.rows << "x" << S.cols;
        throw std::invalid_argument(os.str());
    }
    double scale = 0.0;
    for (double v : S.a) scale = std::max(scale, std::fabs(v));
    for (std::size_t i = 0; i < S.rows; ++i)
        for (std::size_t j = i + 1; j < S.cols; ++j) {
            double diff = std::fabs(S(i, j) - S(j, i));
            if (diff > rel_tol * std::max(scale, 1e-300)) {
                std::ostringstream os;
                os << "matrix not symmetric at (" << i << "," << j << "): |diff| = " << diff;
                throw std::invalid_argument(os.str());
            }
        }
}

EigenResult sym_eig(const Matrix& S_in) {
    require_symmetric(S_in);
    const std::size_t n = S_in.rows;
    Matrix S = S_in;
    // symmetrize exactly so rotations stay consistent
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double m = 0.5 * (S(i, j) + S(j, i));
            S(i, j) = m;
            S(j, i) = m;
        }
    Matrix V = Matrix::identity(n);

    double total = frob_norm(S);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += S(i, j) * S(i, j);
        if (std::sqrt(2.0 * off) <= 1e-15 * total || off == 0.0) break;

        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = S(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                double app = S(p, p), aqq = S(q, q);
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                double* rp = S.row(p);
                double* rq = S.row(q);
                for (std::size_t k = 0; k < n; ++k) {
                    double skp = rp[k], skq = rq[k];
                    rp[k] = c * skp - s * skq;
                    rq[k] = s * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double* rk = S.row(k);
                    double skp = rk[p], skq = rk[q];
                    rk[p] = c * skp - s * skq;
                    rk[q] = s * skp + c * skq;
                }
                S(p, q) = 0.0;
                S(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    double* vk = V.row(k);
                    double vkp = vk[p], vkq = vk[q];
                    vk[p] = c * vkp - s * vkq;
                    vk[q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return S(x, x) > S(y, y); });
    EigenResult res;
    res.values.resize(n);
    res.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        res.values[j] = S(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) res.vectors(i, j) = V(i, order[j]);
    }
    return res;
}

namespace {

void project_out(Vec& x, const std::vector<Vec>& basis) {
    for (const auto& b : basis) {
        double c = dot(x, b);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] -= c * b[i];
    }
}

// Hotelling-deflated product: (S - sum lambda_j v_j v_j^T) x
Vec deflated_apply(const Matrix& S, const Vec& x, const std::vector<Vec>& vs, const Vec& ls) {
    Vec y = matvec(S, x);
    for (std::size_t j = 0; j < vs.size(); ++j) {
        double c = ls[j] * dot(vs[j], x);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] -= c * vs[j][i];
    }
    return y;
}

}  // namespace

EigenResult top_k_eig(const Matrix& S, std::size_t k, double tol, std::size_t max_iter) {
    require_symmetric(S);
    const std::size_t n = S.rows;
    if (k < 1 || k > n) throw std::invalid_argument("top_k_eig: k must be in [1, dim]");
    if (!(tol > 0)) throw std::invalid_argument("top_k_eig: tol must be positive");

    std::vector<Vec> vs;
    Vec ls;
    double scale = 0.0;
    for (std::size_t idx = 0; idx < k; ++idx) {
        Vec x(n, 1.0 / std::sqrt(double(n)));
        if (idx > 0)
            for (std::size_t i = 0; i < n; ++i) x[i] *= 1.0 + double(i + 1) / double(n);
        project_out(x, vs);
        double nx = norm(x);
        if (nx < 1e-12) {
            for (std::size_t i = 0; i < n; ++i) x[i] = 1.0 / double(i + 1);
            project_out(x, vs);
            nx = norm(x);
            if (nx < 1e-12) {
                x.assign(n, 0.0);
                x[idx] = 1.0;
                project_out(x, vs);
                nx = norm(x);
            }
        }
        for (auto& v : x) v /= nx;

        double lam = 0.0, prev = 0.0, resid = 0.0;
        bool done = false;
        for (std::size_t it = 0; it < max_iter; ++it) {
            Vec y = deflated_apply(S, x, vs, ls);
            lam = dot(x, y);
            double s = std::max(idx == 0 ? std::fabs(lam) : scale, 1e-300);
            double r2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double d = y[i] - lam * x[i];
                r2 += d * d;
            }
            resid = std::sqrt(r2);
            if (it > 0 && std::fabs(lam - prev) <= tol * s && resid <= tol * s) {
                done = true;
                break;
            }
            if (resid == 0.0) {
                done = true;
                break;
            }
            prev = lam;
            project_out(y, vs);
            double ny = norm(y);
            if (ny == 0.0) {  // x lies in the kernel of the deflated operator
                lam = 0.0;
                done = true;
                break;
            }
            for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
        }
        if (!done) throw EigenNonConvergence(idx, resid);
        if (idx == 0) scale = std::fabs(lam);
        vs.push_back(x);
        ls.push_back(lam);
    }

    EigenResult res;
    res.values = ls;
    res.vectors = Matrix(n, k);
    for (std::size_t j = 0; j < k; ++j) res.vectors.set_col(j, vs[j]);
    return res;
}

Vec sym_eigvals(const Matrix& S_in) {
    require_symmetric(S_in);
    const std::size_t n = S_in.rows;
    if (n == 0) return {};
    Matrix a = S_in;
    Vec d(n), e(n, 0.0);
    // tridiagonalize in place, no accumulation of transforms
    for (std::size_t i = n - 1; i > 0; --i) {
        std::size_t l = i - 1;
        double h = 0.0;
        if (l > 0) {
            double scale = 0.0;
            for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(a(i, k));
            if (scale == 0.0) {
                e[i] = a(i, l);
            } else {
                for (std::size_t k = 0; k <= l; ++k) {
                    a(i, k) /= scale;
                    h += a(i, k) * a(i, k);
                }
                double f = a(i, l);
                double g = f >= 0 ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                a(i, l) = f - g;
                f = 0.0;
                for (std::size_t j = 0; j <= l; ++j) {
                    g = 0.0;
                    for (std::size_t k = 0; k <= j; ++k) g += a(j, k) * a(i, k);
                    for (std::size_t k = j + 1; k <= l; ++k) g += a(k, j) * a(i, k);
                    e[j] = g / h;
                    f += e[j] * a(i, j);
                }
                double hh = f / (h + h);
                for (std::size_t j = 0; j <= l; ++j) {
                    f = a(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (std::size_t k = 0; k <= j; ++k) a(j, k) -= (f * e[k] + g * a(i, k));
                }
            }
        } else {
            e[i] = a(i, l);
        }
        d[i] = h;
    }
    for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);

    // QL with implicit shifts on (d, e)
    for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        int iter = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
            }
            if (m != l) {
                if (++iter > 60) throw std::runtime_error("sym_eigvals: QL iteration did not converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0 ? std::fabs(r) : -std::fabs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                std::size_t i;
                bool early = false;
                for (i = m; i-- > l;) {
                    double f = s * e[i];
                    double b = c * e[i];
                    e[i + 1] = (r = std::hypot(f, g));
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        early = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    d[i + 1] = g + (p = s * r);
                    g = c * r - b;
                }
                if (early) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
    std::sort(d.begin(), d.end(), std::greater<double>());
    return d;
}

double sym_spectral_norm(const Matrix& S) {
    Vec v = sym_eigvals(S);
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

Matrix orthonormal_columns(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    if (rows < cols) throw std::invalid_argument("orthonormal_columns: rows must be >= cols");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix Q(rows, cols);
    for (auto& v : Q.a) v = g(rng);
    std::vector<Vec> basis;
    for (std::size_t j = 0; j < cols; ++j) {
        Vec c = Q.col(j);
        for (int pass = 0; pass < 2; ++pass) project_out(c, basis);
        double nc = norm(c);
        if (nc < 1e-10) throw std::runtime_error("orthonormal_columns: rank-deficient draw");
        for (auto& v : c) v /= nc;
        basis.push_back(c);
        Q.set_col(j, c);
    }
    return Q;
}

}  // namespace eos
