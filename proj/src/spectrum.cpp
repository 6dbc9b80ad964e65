#include "eoslab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eos {

SpectrumState measure(const Matrix& M, const SpectrumState* prev, const Vec* refV1) {
    const std::size_t n = M.rows;
    const std::size_t k = std::min<std::size_t>(2, n);
    EigenResult e;
    SpectrumState s;
    try {
        e = top_k_eig(M, k);
    } catch (const EigenNonConvergence&) {
        e = sym_eig(M);
        s.usedFallback = true;
    }
    s.lambda1 = e.values[0];
    s.lambda2 = k > 1 ? e.values[1] : 0.0;
    s.v1 = e.vec(0);
    s.degenerate = (s.lambda1 - s.lambda2) < kDegenerateGap * std::fabs(s.lambda1);
    if (prev && prev->v1.size() == n) {
        double c = dot(prev->v1, s.v1);
        if (c < 0) {
            for (auto& x : s.v1) x = -x;
            c = -c;
        }
        s.driftFromPrev = std::clamp(1.0 - c, 0.0, 1.0);
    }
    if (refV1) s.lambdaStar = dot(*refV1, matvec(M, *refV1));
    return s;
}

double epsilon2_estimate(const std::vector<double>& drift, const std::vector<bool>& degenerate, std::size_t t0,
                         std::size_t t1) {
    if (t0 > t1 || t1 >= drift.size()) throw std::invalid_argument("epsilon2_estimate: bad window");
    double e = 0.0;
    for (std::size_t t = t0; t <= t1; ++t) {
        if (degenerate[t] || (t > 0 && degenerate[t - 1])) continue;
        if (std::isfinite(drift[t])) e = std::max(e, drift[t]);
    }
    return e;
}

double epsilon2_estimate(const std::vector<SpectrumState>& states, std::size_t t0, std::size_t t1) {
    std::vector<double> drift;
    std::vector<bool> deg;
    for (const auto& s : states) {
        drift.push_back(s.driftFromPrev);
        deg.push_back(s.degenerate);
    }
    return epsilon2_estimate(drift, deg, t0, t1);
}

}  // namespace eos
