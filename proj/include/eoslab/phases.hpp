#pragma once

#include <array>
#include <string>
#include <vector>

namespace eos {

enum class Phase { I = 1, II = 2, III = 3, IV = 4 };

std::string to_string(Phase p);

struct PhaseSegment {
    Phase phase = Phase::I;
    std::size_t start = 0;
    std::size_t end = 0;  // inclusive
    std::size_t length() const { return end - start + 1; }
    bool operator==(const PhaseSegment&) const = default;
};

struct CycleStats {
    std::size_t cycles = 0;
    double meanPeriod = 0.0;
    std::array<double, 4> perPhaseMeanLen{};
};

std::vector<double> moving_average(const std::vector<double>& x, std::size_t window);

// per-step labels before merging
std::vector<Phase> classify_steps(const std::vector<double>& lambda, const std::vector<double>& dtf, double eta,
                                  std::size_t smoothWindow);

std::vector<PhaseSegment> segment(const std::vector<double>& lambda, const std::vector<double>& dtf, double eta,
                                  std::size_t smoothWindow = 5, std::size_t minLen = 3);

CycleStats cycle_stats(const std::vector<PhaseSegment>& segments);

Phase phase_at(const std::vector<PhaseSegment>& segments, std::size_t t);

}  // namespace eos
