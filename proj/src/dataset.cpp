#include "eoslab/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace eos {

namespace {

LabelKind classify(const Vec& Y) {
    for (double y : Y)
        if (y != 1.0 && y != -1.0) return LabelKind::Real;
    return LabelKind::Signed;
}

void fill_projections(Dataset& ds) {
    ds.z.assign(ds.r(), 0.0);
    for (std::size_t i = 0; i < ds.r(); ++i) ds.z[i] = dot(ds.Y, ds.v(i));
    ds.XtX = matmul_tn(ds.X, ds.X);
    ds.XV = matmul(ds.X, ds.V);
}

// eigendecomposition of X^T X through whichever Gram side is smaller
void compute_spectrum(Dataset& ds) {
    const std::size_t n = ds.n(), d = ds.d();
    Vec vals;
    Matrix vecs;  // n x k
    if (d < n) {
        auto e = sym_eig(matmul_nt(ds.X, ds.X));
        vals = e.values;
        vecs = Matrix(n, d);
        for (std::size_t i = 0; i < d; ++i) {
            if (vals[i] <= 0) continue;
            Vec v = matvec_t(ds.X, e.vec(i));
            double nv = norm(v);
            for (std::size_t k = 0; k < n; ++k) vecs(k, i) = v[k] / nv;
        }
    } else {
        auto e = sym_eig(ds.gram());
        vals = e.values;
        vecs = e.vectors;
    }
    double top = vals.empty() ? 0.0 : vals[0];
    std::size_t r = 0;
    while (r < vals.size() && vals[r] > kRankTol * top && top > 0) ++r;
    ds.lambdas.assign(vals.begin(), vals.begin() + r);
    ds.V = Matrix(n, r);
    for (std::size_t i = 0; i < r; ++i) {
        Vec v = vecs.col(i);
        double zi = dot(ds.Y, v);
        bool flip = zi < 0;
        if (std::fabs(zi) <= 1e-12 * std::sqrt(double(n))) {
            flip = false;
            for (double c : v)
                if (std::fabs(c) > 1e-12) {
                    flip = c < 0;
                    break;
                }
        }
        if (flip)
            for (auto& c : v) c = -c;
        ds.V.set_col(i, v);
    }
    fill_projections(ds);
}

}  // namespace

Vec shaped_spectrum(std::size_t r, double top, double gap, double ratio) {
    Vec s(r);
    if (r == 0) return s;
    s[0] = top;
    for (std::size_t i = 1; i < r; ++i) s[i] = top / gap * std::pow(ratio, -double(i - 1));
    return s;
}

Dataset gen_spectrum_dataset(std::size_t n, std::size_t d, const Vec& spectrum, const LabelMode& mode,
                             std::uint64_t seed) {
    const std::size_t r = spectrum.size();
    if (r == 0) throw std::invalid_argument("spectrum must be nonempty");
    if (r > std::min(n, d)) throw std::invalid_argument("spectrum length exceeds min(d, n)");
    for (std::size_t i = 0; i < r; ++i) {
        if (!(spectrum[i] > 0)) throw std::invalid_argument("spectrum entries must be positive");
        if (i > 0 && spectrum[i] > spectrum[i - 1]) throw std::invalid_argument("spectrum must be descending");
    }
    std::mt19937_64 rng(seed);
    Matrix Ud = orthonormal_columns(d, r, rng());
    Matrix Un = orthonormal_columns(n, r, rng());

    Dataset ds;
    ds.X = Matrix(d, n);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t k = 0; k < r; ++k) {
            double c = Ud(i, k) * std::sqrt(spectrum[k]);
            for (std::size_t j = 0; j < n; ++j) ds.X(i, j) += c * Un(j, k);
        }

    const double sn = std::sqrt(double(n));
    ds.Y.assign(n, 0.0);
    switch (mode.kind) {
        case LabelMode::Kind::RandomSign: {
            std::bernoulli_distribution coin(0.5);
            for (auto& y : ds.Y) y = coin(rng) ? 1.0 : -1.0;
            break;
        }
        case LabelMode::Kind::AlignEigvec: {
            if (mode.index < 1 || mode.index > r) throw std::invalid_argument("align_eigvec index out of range");
            for (std::size_t j = 0; j < n; ++j) ds.Y[j] = sn * Un(j, mode.index - 1);
            break;
        }
        case LabelMode::Kind::ProjectionFloor: {
            double k2 = mode.kappa * mode.kappa;
            if (mode.kappa < 0 || r * k2 > 1.0 + 1e-12)
                throw std::invalid_argument("projection_floor needs 0 <= kappa <= 1/sqrt(r)");
            std::uniform_real_distribution<double> u(0.0, 1.0);
            std::bernoulli_distribution coin(0.5);
            Vec w(r);
            double sw = 0.0;
            for (auto& x : w) sw += (x = u(rng) + 1e-3);
            double rest = std::max(0.0, 1.0 - r * k2);
            for (std::size_t k = 0; k < r; ++k) {
                double c = std::sqrt(k2 + rest * w[k] / sw) * (coin(rng) ? 1.0 : -1.0);
                for (std::size_t j = 0; j < n; ++j) ds.Y[j] += sn * c * Un(j, k);
            }
            if (mode.sign_labels)
                for (auto& y : ds.Y) y = y >= 0 ? 1.0 : -1.0;
            break;
        }
    }
    ds.labelKind = classify(ds.Y);
    ds.lambdas = spectrum;
    ds.V = Un;
    fill_projections(ds);
    return ds;
}

Dataset make_dataset(Matrix X, Vec Y) {
    if (X.cols != Y.size()) throw std::invalid_argument("label count does not match sample count");
    Dataset ds;
    ds.X = std::move(X);
    ds.Y = std::move(Y);
    ds.labelKind = classify(ds.Y);
    compute_spectrum(ds);
    return ds;
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
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

bool parse_double(std::string s, double& out) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return false;
    s = s.substr(b, e - b + 1);
    if (!s.empty() && s[0] == '+') s.erase(0, 1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

Dataset load_csv(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 0, width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (has_header && lineno == 1) continue;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_commas(line);
        if (width == 0) width = cells.size();
        if (cells.size() != width || width < 2) {
            std::ostringstream os;
            os << path << ": row " << lineno << " has " << cells.size() << " cells, expected " << width;
            throw std::runtime_error(os.str());
        }
        std::vector<double> vals(width);
        for (std::size_t c = 0; c < width; ++c)
            if (!parse_double(cells[c], vals[c])) {
                std::ostringstream os;
                os << path << ": row " << lineno << " column " << c + 1 << " is not numeric: '" << cells[c] << "'";
                throw std::runtime_error(os.str());
            }
        rows.push_back(std::move(vals));
    }
    if (rows.empty()) throw std::runtime_error(path + ": no data rows");
    const std::size_t n = rows.size(), d = width - 1;
    Matrix X(d, n);
    Vec Y(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < d; ++i) X(i, j) = rows[j][i];
        Y[j] = rows[j][d];
    }
    return make_dataset(std::move(X), std::move(Y));
}

void export_csv(const Dataset& ds, const std::string& path, bool header) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << std::setprecision(17);
    if (header) {
        for (std::size_t i = 0; i < ds.d(); ++i) out << "x" << i << ",";
        out << "y\n";
    }
    for (std::size_t j = 0; j < ds.n(); ++j) {
        for (std::size_t i = 0; i < ds.d(); ++i) out << ds.X(i, j) << ",";
        out << ds.Y[j] << "\n";
    }
}

Dataset mean_subtract(const Dataset& ds) {
    if (ds.n() < 2) throw std::invalid_argument("mean_subtract needs at least two samples");
    Matrix X = ds.X;
    for (std::size_t i = 0; i < X.rows; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < X.cols; ++j) mean += X(i, j);
        mean /= double(X.cols);
        for (std::size_t j = 0; j < X.cols; ++j) X(i, j) -= mean;
    }
    return make_dataset(std::move(X), ds.Y);
}

SpectrumStats spectrum_stats(const Dataset& ds) {
    SpectrumStats s;
    s.r = ds.r();
    if (s.r == 0) return s;
    s.lambda1 = ds.lambdas.front();
    s.lambda_r = ds.lambdas.back();
    if (s.r >= 2) {
        double chi = 0.0;
        for (std::size_t i = 0; i + 1 < s.r; ++i) chi = std::max(chi, ds.lambdas[i] / ds.lambdas[i + 1]);
        s.chi = chi;
        s.top_gap_ok = ds.lambdas[0] >= 2.0 * ds.lambdas[1];
    }
    double kmin = std::numeric_limits<double>::infinity();
    for (double zi : ds.z) kmin = std::min(kmin, std::fabs(zi));
    s.kappa = kmin / std::sqrt(double(ds.n()));
    return s;
}

}  // namespace eos
