#include "eoslab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace eos {

Activation parse_activation(const std::string& s) {
    if (s == "linear") return Activation::Linear;
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    if (s == "elu") return Activation::Elu;
    throw std::invalid_argument("unknown activation '" + s + "'");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Linear: return "linear";
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Elu: return "elu";
    }
    return "linear";
}

namespace {

double act(Activation a, double z) {
    switch (a) {
        case Activation::Linear: return z;
        case Activation::Tanh: return std::tanh(z);
        case Activation::Relu: return z > 0 ? z : 0.0;
        case Activation::Elu: return z > 0 ? z : std::expm1(z);
    }
    return z;
}

double dact(Activation a, double z) {
    switch (a) {
        case Activation::Linear: return 1.0;
        case Activation::Tanh: {
            double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::Relu: return z > 0 ? 1.0 : 0.0;
        case Activation::Elu: return z > 0 ? 1.0 : std::exp(z);
    }
    return 1.0;
}

// delta[l] = d f / d Z[l], width_l x n
std::vector<Matrix> backprop_deltas(const MlpNet& net, const ForwardCache& c) {
    const std::size_t L = net.depth(), n = c.F.size();
    std::vector<Matrix> delta(L);
    delta[L - 1] = Matrix(1, n, net.output_scale);
    for (std::size_t l = L - 1; l-- > 0;) {
        Matrix back = matmul_tn(net.layers[l + 1], delta[l + 1]);
        const Matrix& Z = c.Z[l];
        for (std::size_t i = 0; i < back.a.size(); ++i) back.a[i] *= dact(net.activation, Z.a[i]);
        delta[l] = std::move(back);
    }
    return delta;
}

}  // namespace

std::size_t MlpNet::param_count() const {
    std::size_t p = 0;
    for (const auto& W : layers) p += W.rows * W.cols;
    return p;
}

std::vector<std::size_t> MlpNet::dims() const {
    std::vector<std::size_t> d;
    if (layers.empty()) return d;
    d.push_back(layers.front().cols);
    for (const auto& W : layers) d.push_back(W.rows);
    return d;
}

MlpNet init_mlp(const std::vector<std::size_t>& dims, Activation act_kind, std::uint64_t seed, double init_scale) {
    if (dims.size() < 2) throw std::invalid_argument("init_mlp: need at least input and output dims");
    if (dims.back() != 1) throw std::invalid_argument("init_mlp: last dim must be 1");
    for (auto d : dims)
        if (d == 0) throw std::invalid_argument("init_mlp: zero-width layer");
    std::mt19937_64 rng(seed);
    MlpNet net;
    net.activation = act_kind;
    for (std::size_t l = 1; l < dims.size(); ++l) {
        double bound = 1.0 / std::sqrt(double(dims[l - 1]));
        std::uniform_real_distribution<double> u(-bound, bound);
        Matrix W(dims[l], dims[l - 1]);
        for (auto& v : W.a) v = u(rng) * init_scale;
        net.layers.push_back(std::move(W));
    }
    net.freezeMask.assign(net.layers.size(), false);
    return net;
}

ForwardCache forward_cached(const MlpNet& net, const Matrix& X) {
    if (net.layers.empty()) throw std::invalid_argument("forward: empty network");
    if (X.rows != net.layers.front().cols) throw std::invalid_argument("forward: input dimension mismatch");
    ForwardCache c;
    c.H.push_back(X);
    const std::size_t L = net.depth();
    for (std::size_t l = 0; l < L; ++l) {
        Matrix Z = matmul(net.layers[l], c.H.back());
        if (l + 1 < L) {
            Matrix H = Z;
            if (net.activation != Activation::Linear)
                for (auto& v : H.a) v = act(net.activation, v);
            c.Z.push_back(std::move(Z));
            c.H.push_back(std::move(H));
        } else {
            for (auto& v : Z.a) v *= net.output_scale;
            c.F = Z.a;
            c.Z.push_back(std::move(Z));
        }
    }
    return c;
}

LossGrads loss_and_grads(const MlpNet& net, const Dataset& ds) {
    auto c = forward_cached(net, ds.X);
    const std::size_t n = ds.n();
    LossGrads out;
    out.F = c.F;
    out.D = lincomb(1.0, c.F, -1.0, ds.Y);
    out.loss = dot(out.D, out.D) / double(n);
    auto delta = backprop_deltas(net, c);
    out.grads.resize(net.depth());
    for (std::size_t l = 0; l < net.depth(); ++l) {
        Matrix G = delta[l];
        for (std::size_t a = 0; a < G.rows; ++a)
            for (std::size_t i = 0; i < n; ++i) G(a, i) *= out.D[i] * 2.0 / double(n);
        out.grads[l] = matmul_nt(G, c.H[l]);
    }
    return out;
}

namespace {

double loss_only(const MlpNet& net, const Dataset& ds) {
    auto c = forward_cached(net, ds.X);
    double s = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        double d = c.F[i] - ds.Y[i];
        s += d * d;
    }
    return s / double(ds.n());
}

std::vector<bool> kink_pattern(const MlpNet& net, const Dataset& ds) {
    auto c = forward_cached(net, ds.X);
    std::vector<bool> p;
    for (std::size_t l = 0; l + 1 < c.Z.size(); ++l)
        for (double z : c.Z[l].a) p.push_back(z > 0);
    return p;
}

}  // namespace

double grad_check(const MlpNet& net, const Dataset& ds, double h, std::size_t samples, std::uint64_t seed) {
    if (!(h > 0)) throw std::invalid_argument("grad_check: h must be positive");
    auto lg = loss_and_grads(net, ds);
    Vec g = flatten(lg.grads);
    const std::size_t p = g.size();
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    if (samples < p) idx.resize(samples);

    std::vector<std::size_t> offset(net.depth() + 1, 0);
    for (std::size_t l = 0; l < net.depth(); ++l) offset[l + 1] = offset[l] + net.layers[l].a.size();
    const bool kinked = net.activation == Activation::Relu || net.activation == Activation::Elu;

    double worst = 0.0;
    MlpNet probe = net;
    for (std::size_t k : idx) {
        std::size_t l = std::upper_bound(offset.begin(), offset.end(), k) - offset.begin() - 1;
        double& w = probe.layers[l].a[k - offset[l]];
        double w0 = w;
        // fourth-order central stencil
        double f[4];
        std::vector<bool> pat[4];
        const double off[4] = {2 * h, h, -h, -2 * h};
        for (int j = 0; j < 4; ++j) {
            w = w0 + off[j];
            f[j] = loss_only(probe, ds);
            if (kinked) pat[j] = kink_pattern(probe, ds);
        }
        w = w0;
        if (kinked && !(pat[0] == pat[1] && pat[1] == pat[2] && pat[2] == pat[3])) continue;  // straddles a kink
        double fd = (-f[0] + 8.0 * f[1] - 8.0 * f[2] + f[3]) / (12.0 * h);
        double denom = std::max({std::fabs(fd), std::fabs(g[k]), 1e-8});
        worst = std::max(worst, std::fabs(fd - g[k]) / denom);
    }
    return worst;
}

Matrix jacobian(const MlpNet& net, const Matrix& X) {
    auto c = forward_cached(net, X);
    auto delta = backprop_deltas(net, c);
    const std::size_t n = X.cols;
    Matrix J(n, net.param_count());
    std::size_t off = 0;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const Matrix& Hp = c.H[l];
        const std::size_t out = net.layers[l].rows, in = net.layers[l].cols;
        for (std::size_t i = 0; i < n; ++i) {
            double* row = J.row(i) + off;
            for (std::size_t a = 0; a < out; ++a) {
                double da = delta[l](a, i);
                for (std::size_t b = 0; b < in; ++b) row[a * in + b] = da * Hp(b, i);
            }
        }
        off += out * in;
    }
    return J;
}

GramSplit gram_split(const MlpNet& net, const Matrix& X) {
    // per-layer block of J J^T is (delta^T delta) .* (H^T H)
    auto c = forward_cached(net, X);
    auto delta = backprop_deltas(net, c);
    const std::size_t n = X.cols, L = net.depth();
    const double s = 2.0 / double(n);
    GramSplit g;
    g.M_A = Matrix(n, n);
    g.M_W = Matrix(n, n);
    for (std::size_t l = 0; l < L; ++l) {
        Matrix dd = matmul_tn(delta[l], delta[l]);
        Matrix hh = matmul_tn(c.H[l], c.H[l]);
        Matrix& target = (l + 1 == L) ? g.M_A : g.M_W;
        for (std::size_t i = 0; i < n * n; ++i) target.a[i] += s * dd.a[i] * hh.a[i];
    }
    g.M = lincomb(1.0, g.M_A, 1.0, g.M_W);
    return g;
}

MlpNet gd_step_mlp(const MlpNet& net, const std::vector<Matrix>& grads, double eta,
                   const std::vector<bool>& freezeMask) {
    if (grads.size() != net.depth()) throw std::invalid_argument("gd_step_mlp: gradient count mismatch");
    MlpNet out = net;
    for (std::size_t l = 0; l < net.depth(); ++l) {
        if (l < freezeMask.size() && freezeMask[l]) continue;
        auto& W = out.layers[l].a;
        const auto& G = grads[l].a;
        for (std::size_t i = 0; i < W.size(); ++i) W[i] -= eta * G[i];
    }
    return out;
}

std::vector<bool> freeze_outer(std::size_t depth, std::size_t k) {
    if (k > depth) throw std::invalid_argument("freeze depth exceeds layer count");
    std::vector<bool> mask(depth, false);
    for (std::size_t i = 0; i < k; ++i) mask[depth - 1 - i] = true;
    return mask;
}

double output_norm2(const MlpNet& net) { return dot(net.layers.back().a, net.layers.back().a); }

Vec flatten(const std::vector<Matrix>& layers) {
    Vec v;
    for (const auto& W : layers) v.insert(v.end(), W.a.begin(), W.a.end());
    return v;
}

}  // namespace eos

namespace eos {

Vec gram_apply(const MlpNet& net, const Matrix& X, const Vec& x) {
    auto c = forward_cached(net, X);
    auto delta = backprop_deltas(net, c);
    const std::size_t n = X.cols;
    Vec y(n, 0.0);
    for (std::size_t l = 0; l < net.depth(); ++l) {
        Matrix Dx = delta[l];
        for (std::size_t a = 0; a < Dx.rows; ++a)
            for (std::size_t i = 0; i < n; ++i) Dx(a, i) *= x[i];
        Matrix G = matmul_nt(Dx, c.H[l]);    // J_l^T x as a layer-shaped matrix
        Matrix GH = matmul(G, c.H[l]);       // out x n
        for (std::size_t a = 0; a < GH.rows; ++a)
            for (std::size_t i = 0; i < n; ++i) y[i] += delta[l](a, i) * GH(a, i);
    }
    for (auto& v : y) v *= 2.0 / double(n);
    return y;
}

}  // namespace eos
