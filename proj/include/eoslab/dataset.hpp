#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eoslab/linalg.hpp"

namespace eos {

enum class LabelKind { Signed, Real };

struct Dataset {
    Matrix X;  // d x n, one column per sample
    Vec Y;
    LabelKind labelKind = LabelKind::Real;

    // nonzero spectrum of X^T X
    Vec lambdas;  // descending
    Matrix V;     // n x r
    Vec z;        // z_i = Y^T v_i

    Matrix XtX;   // X^T X, n x n
    Matrix XV;    // X V, d x r; X^T H X has the spectrum of XV^T H XV

    std::size_t n() const { return X.cols; }
    std::size_t d() const { return X.rows; }
    std::size_t r() const { return lambdas.size(); }
    Vec v(std::size_t i) const { return V.col(i); }
    Matrix gram() const { return matmul_tn(X, X); }  // X^T X
};

struct LabelMode {
    enum class Kind { RandomSign, AlignEigvec, ProjectionFloor };
    Kind kind = Kind::RandomSign;
    std::size_t index = 1;  // 1-based, AlignEigvec
    double kappa = 0.0;     // ProjectionFloor
    bool sign_labels = false;  // ProjectionFloor: replace Y by sign(Y)

    static LabelMode random_sign() { return {}; }
    static LabelMode align(std::size_t i) { return {Kind::AlignEigvec, i, 0.0, false}; }
    static LabelMode floor(double kappa, bool sign = false) { return {Kind::ProjectionFloor, 1, kappa, sign}; }
};

struct SpectrumStats {
    std::optional<double> chi;
    double kappa = 0.0;
    double lambda1 = 0.0;
    double lambda_r = 0.0;
    std::size_t r = 0;
    bool top_gap_ok = false;  // lambda1 >= 2 lambda2
};

// relative cutoff below which an eigenvalue of X^T X counts as zero
inline constexpr double kRankTol = 1e-9;

Dataset gen_spectrum_dataset(std::size_t n, std::size_t d, const Vec& spectrum, const LabelMode& mode,
                             std::uint64_t seed);
Dataset make_dataset(Matrix X, Vec Y);  // computes the cached spectrum
Dataset load_csv(const std::string& path, bool has_header);
void export_csv(const Dataset& ds, const std::string& path, bool header = true);
Dataset mean_subtract(const Dataset& ds);
SpectrumStats spectrum_stats(const Dataset& ds);

// geometric spectrum helper: first value top, then top/gap * ratio^-i
Vec shaped_spectrum(std::size_t r, double top, double gap, double ratio);

}  // namespace eos
