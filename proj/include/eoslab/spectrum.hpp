#pragma once

#include <limits>
#include <vector>

#include "eoslab/linalg.hpp"

namespace eos {

struct SpectrumState {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    Vec v1;
    double lambdaStar = std::numeric_limits<double>::quiet_NaN();
    double driftFromPrev = 0.0;
    bool degenerate = false;  // lambda1 - lambda2 < 1e-8 lambda1
    bool usedFallback = false;
};

inline constexpr double kDegenerateGap = 1e-8;

// top-2 eigenpairs, v1 sign-aligned with prev->v1; refV1 gives lambdaStar = refV1^T M refV1
SpectrumState measure(const Matrix& M, const SpectrumState* prev = nullptr, const Vec* refV1 = nullptr);

// max drift over states [t0, t1], skipping near-degenerate steps
double epsilon2_estimate(const std::vector<SpectrumState>& states, std::size_t t0, std::size_t t1);
double epsilon2_estimate(const std::vector<double>& drift, const std::vector<bool>& degenerate, std::size_t t0,
                         std::size_t t1);

}  // namespace eos
