#include "eoslab/phases.hpp"

#include <stdexcept>

namespace eos {

std::string to_string(Phase p) {
    switch (p) {
        case Phase::I: return "I";
        case Phase::II: return "II";
        case Phase::III: return "III";
        case Phase::IV: return "IV";
    }
    return "?";
}

std::vector<double> moving_average(const std::vector<double>& x, std::size_t window) {
    if (window <= 1) return x;
    const std::size_t h = window / 2, n = x.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i >= h ? i - h : 0;
        std::size_t hi = std::min(n - 1, i + h);
        double s = 0.0;
        for (std::size_t k = lo; k <= hi; ++k) s += x[k];
        out[i] = s / double(hi - lo + 1);
    }
    return out;
}

std::vector<Phase> classify_steps(const std::vector<double>& lambda, const std::vector<double>& dtf, double eta,
                                  std::size_t smoothWindow) {
    if (lambda.size() != dtf.size()) throw std::invalid_argument("segment: length mismatch");
    const std::size_t n = lambda.size();
    const double edge = 2.0 / eta;
    auto s = moving_average(lambda, smoothWindow);
    std::vector<Phase> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        if (lambda[t] < edge) {
            out[t] = dtf[t] < 0 ? Phase::I : Phase::IV;
        } else {
            // forward difference; the last step looks backward
            double dl = 0.0;
            if (t + 1 < n) dl = s[t + 1] - s[t];
            else if (t > 0) dl = s[t] - s[t - 1];
            out[t] = dl >= 0 ? Phase::II : Phase::III;
        }
    }
    return out;
}

std::vector<PhaseSegment> segment(const std::vector<double>& lambda, const std::vector<double>& dtf, double eta,
                                  std::size_t smoothWindow, std::size_t minLen) {
    if (lambda.empty()) throw std::invalid_argument("segment: no records");
    auto labels = classify_steps(lambda, dtf, eta, smoothWindow);
    std::vector<PhaseSegment> raw;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (!raw.empty() && raw.back().phase == labels[t]) raw.back().end = t;
        else raw.push_back({labels[t], t, t});
    }
    std::vector<PhaseSegment> out;
    for (const auto& seg : raw) {
        if (!out.empty() && (seg.length() < minLen || out.back().phase == seg.phase)) {
            out.back().end = seg.end;
        } else if (!out.empty() && out.back().length() < minLen) {
            // a short leading segment has nothing before it; let the next one absorb it
            out.back() = {seg.phase, out.back().start, seg.end};
        } else {
            out.push_back(seg);
        }
    }
    return out;
}

CycleStats cycle_stats(const std::vector<PhaseSegment>& segments) {
    CycleStats cs;
    std::array<double, 4> total{};
    std::array<std::size_t, 4> count{};
    for (const auto& s : segments) {
        int k = int(s.phase) - 1;
        total[k] += double(s.length());
        count[k] += 1;
    }
    for (int k = 0; k < 4; ++k) cs.perPhaseMeanLen[k] = count[k] ? total[k] / double(count[k]) : 0.0;

    std::vector<std::size_t> starts;
    std::size_t i = 0;
    while (i + 3 < segments.size()) {
        if (segments[i].phase == Phase::I && segments[i + 1].phase == Phase::II &&
            segments[i + 2].phase == Phase::III && segments[i + 3].phase == Phase::IV) {
            starts.push_back(segments[i].start);
            ++cs.cycles;
            i += 4;
        } else {
            ++i;
        }
    }
    if (starts.size() >= 2) cs.meanPeriod = double(starts.back() - starts.front()) / double(starts.size() - 1);
    else if (cs.cycles == 1) {
        // single cycle: its own span
        for (std::size_t j = 0; j + 3 < segments.size(); ++j)
            if (segments[j].start == starts[0]) {
                cs.meanPeriod = double(segments[j + 3].end - segments[j].start + 1);
                break;
            }
    }
    return cs;
}

Phase phase_at(const std::vector<PhaseSegment>& segments, std::size_t t) {
    for (const auto& s : segments)
        if (t >= s.start && t <= s.end) return s.phase;
    throw std::out_of_range("phase_at: step not covered");
}

}  // namespace eos
