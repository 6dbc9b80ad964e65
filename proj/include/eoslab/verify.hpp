#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eoslab/phases.hpp"
#include "eoslab/tracker.hpp"
#include "json.hpp"

namespace eos {

using Json = nlohmann::ordered_json;

enum class Status { Pass, Fail, ReportOnly, Skipped };
std::string to_string(Status s);
Status parse_status(const std::string& s);

struct CheckEntry {
    std::string name;
    std::string anchor;
    Status status = Status::ReportOnly;
    std::map<std::string, double> measured;
    std::map<std::string, double> threshold;
    std::size_t stepsViolating = 0;
    std::vector<std::size_t> steps;  // offending (or flagged) step indices
    std::string note;

    bool operator==(const CheckEntry& o) const;
};

struct VerificationReport {
    Json runConfig;
    std::vector<CheckEntry> checks;
    std::map<std::string, double> constants;
    std::vector<PhaseSegment> segments;

    bool allPassed() const;
    const CheckEntry* find(const std::string& name) const;
    bool operator==(const VerificationReport& o) const;
};

Json to_json(const VerificationReport& r);
VerificationReport report_from_json(const Json& j);
std::string dump_report(const VerificationReport& r);

// everything the checks read; built from a finished run or from logs on disk
struct VerifyInput {
    RunConfig cfg;
    double eta = 0.0;
    std::size_t n = 0;
    std::size_t m = 0;  // two-layer width, 0 for mlp
    double ynorm = 0.0;
    bool signedLabels = true;
    bool yInColumnSpace = false;
    std::size_t rank = 0;
    SpectrumStats data;
    std::vector<TrajectoryRecord> records;
    std::vector<Diagnostics> diag;  // may be empty
    bool diverged = false;
};

VerifyInput verify_input(const RunResult& res);
VerifyInput verify_input(const RunConfig& cfg, std::vector<TrajectoryRecord> records, std::vector<Diagnostics> diag);

struct DerivedConstants {
    double epsilon2 = 0.0;
    double BLambda = 0.0;
    double BD = 0.0;
    double lambdaR = 0.0;
};
DerivedConstants derived_constants(const VerifyInput& in);

CheckEntry check_outlier(const std::vector<TrajectoryRecord>& records, double eta);
CheckEntry check_anorm_coupling(const std::vector<TrajectoryRecord>& records);
CheckEntry check_ps_sign(const std::vector<TrajectoryRecord>& records, const std::vector<PhaseSegment>& segments);
CheckEntry check_geometric_growth(const std::vector<TrajectoryRecord>& records, double eta,
                                  const std::vector<PhaseSegment>& segments, double epsilon2, double c);
CheckEntry check_dfpos_property(std::size_t trials, std::uint64_t seed);
CheckEntry check_contraction_property(std::size_t trials, std::uint64_t seed);
CheckEntry check_adrop(const std::vector<TrajectoryRecord>& records, double eta, std::size_t n, double ynorm);
CheckEntry check_r_tracking(const VerifyInput& in, const DerivedConstants& k);
CheckEntry check_relaxed_ps(const VerifyInput& in, const std::vector<PhaseSegment>& segments);
CheckEntry check_twolayer_theory(const VerifyInput& in);
CheckEntry check_identities(const VerifyInput& in, const std::string& which);
CheckEntry check_null_space(const VerifyInput& in);
CheckEntry check_interpolation_scale(const VerifyInput& in);
CheckEntry check_orth_decomposition(const std::vector<TrajectoryRecord>& records, std::size_t n);
CheckEntry check_first_order(const std::vector<TrajectoryRecord>& records, const std::vector<PhaseSegment>& segments);
CheckEntry check_ma_smallness(const VerifyInput& in);

// all check names in report order
const std::vector<std::string>& all_check_names();

// only = empty runs everything
VerificationReport verify(const VerifyInput& in, const std::vector<std::string>& only = {});

Json config_to_json(const RunConfig& cfg);

}  // namespace eos
