#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eoslab/dataset.hpp"
#include "eoslab/mlp.hpp"
#include "eoslab/spectrum.hpp"
#include "eoslab/twolayer.hpp"

namespace eos {

enum class ModelKind { TwoLayer, Mlp };
enum class V1Source { Gram, DataX };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataSpec {
    std::string source = "spectrum";  // spectrum | csv
    std::size_t n = 200;
    std::size_t d = 50;
    std::size_t rank = 50;
    double top = 40.0;
    double gap = 3.0;
    double ratio = 1.15;
    Vec spectrum;  // explicit values override the shape parameters
    std::string labels = "projection_floor";  // random_sign | align_eigvec | projection_floor
    std::size_t align_index = 1;
    double kappa = 0.14;
    bool sign_labels = false;
    std::string csv_path;
    bool csv_header = true;
    bool mean_subtract = false;
    std::optional<std::uint64_t> seed;
};

struct RunConfig {
    ModelKind model = ModelKind::TwoLayer;
    std::size_t width = 400;
    double w_scale = 1.0;
    std::vector<std::size_t> hidden;
    Activation activation = Activation::Linear;
    double init_scale = 1.0;
    double eta = 0.0;  // > 0 overrides eta_fraction
    double eta_fraction = 0.8;
    std::size_t steps = 1000;
    std::uint64_t seed = 1;
    DataSpec data;
    std::size_t freeze_depth = 0;
    std::size_t measure_every = 1;
    std::optional<V1Source> v1_source;
    std::vector<std::size_t> relaxed_ps_indices;
    std::size_t relaxed_ps_steps = 0;  // 0: every step
    std::size_t smooth_window = 5;
    std::size_t min_len = 3;
    double growth_c = 10.0;
    std::size_t dfpos_trials = 10000;

    V1Source v1() const {
        return v1_source.value_or(model == ModelKind::Mlp ? V1Source::Gram : V1Source::DataX);
    }
};

struct TrajectoryRecord {
    std::size_t t = 0;
    double loss = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambdaStar = 0.0;
    double twoOverEta = 0.0;
    double Anorm2 = 0.0;
    double DtF = 0.0;
    double Dtv1 = 0.0;
    double Rnorm2 = 0.0;
    double RprimeNorm2 = 0.0;
    double RdiffNorm = 0.0;
    double GammaNorm = 0.0;
    double v1drift = 0.0;
    bool anomaly = false;
    double foErrD = 0.0;
    double foErrA = 0.0;
    double alphaMargin = 0.0;
};

// per-record quantities that do not fit the trajectory schema
struct Diagnostics {
    std::size_t t = 0;
    double resResidual = 0.0;  // D update rule
    double resGram = 0.0;      // Gram update rule
    double resKey = 0.0;       // sharpness-surrogate recursion
    double resAnorm = 0.0;     // output-norm update rule
    double ks = 0.0;
    double interpResidual = 0.0;
    double e1Norm = 0.0;
    double lambdaMinCol = 0.0;  // lambda_min of V_r^T M V_r
    double mstarLambda1 = 0.0;
    double nullResidual = 0.0;
    double maLambda1 = 0.0;  // lambda_max(M_A)
    double lambdaMin = 0.0;
    Vec relaxedLhs;
    Vec relaxedRhs;
};

struct RunResult {
    RunConfig cfg;
    Dataset ds;
    double eta = 0.0;
    double lambda0 = 0.0;
    std::vector<TrajectoryRecord> records;
    std::vector<Diagnostics> diag;
    bool diverged = false;
    std::size_t divergedAt = 0;
    std::optional<TwoLayerNet> twolayer;
    std::optional<MlpNet> mlp;
    std::vector<std::string> notices;
};

struct FirstOrderErrors {
    double foErrD = 0.0;
    double foErrA = 0.0;
};

void validate(const RunConfig& cfg);
Dataset build_dataset(const RunConfig& cfg);
TwoLayerNet build_twolayer(const RunConfig& cfg, const Dataset& ds);
MlpNet build_mlp(const RunConfig& cfg, const Dataset& ds);
double resolve_eta(const RunConfig& cfg, const Dataset& ds, double* lambda0 = nullptr);

RunResult run(const RunConfig& cfg);

Vec rprime_step(const Vec& Rprime, const Matrix& K, const Vec& v1, double eta);
Vec rprime_step(const Vec& Rprime, const std::function<Vec(const Vec&)>& applyK, const Vec& v1, double eta);

// D1 = D(t+1); MD0 = M(t) D(t); dA = |A(t+1)|^2 - |A(t)|^2
FirstOrderErrors first_order_errors(const Vec& D0, const Vec& D1, const Vec& MD0, double dA, double DtF, double eta);
// sum (a1-a0)(a1+a0), no cancellation for tiny steps
double norm2_change(const Vec& a0, const Vec& a1);

// dead zone around zero for sign comparisons
inline constexpr double kSignDeadZone = 1e-12;
int dead_sign(double delta, double scale);
bool is_anomaly(double dLambda, double lambdaScale, double dA, double aScale);

extern const std::vector<std::string> kTrajectoryColumns;
void write_trajectory_csv(const std::string& path, const std::vector<TrajectoryRecord>& records);
std::vector<TrajectoryRecord> read_trajectory_csv(const std::string& path);
std::vector<std::string> diagnostics_columns(std::size_t relaxedCount);
void write_diagnostics_csv(const std::string& path, const std::vector<Diagnostics>& diag, std::size_t relaxedCount);
std::vector<Diagnostics> read_diagnostics_csv(const std::string& path);

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string format_double(double v);

}  // namespace eos
