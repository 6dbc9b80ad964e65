#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eoslab/tracker.hpp"

namespace eos {

struct Series {
    std::string label;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    bool right = false;    // plot against the right axis
    bool points = false;   // scatter instead of line
};

struct PlotSpec {
    std::string title;
    std::string xlabel = "step";
    std::string leftLabel, rightLabel;
    bool logRight = false;
    std::optional<double> hline;  // on the left axis
    std::string hlineLabel;
    std::vector<Series> series;
};

std::string render_svg(const PlotSpec& p);

// sharpness_loss.svg, anorm_sharpness.svg, r_decomposition.svg
void write_run_plots(const std::string& dir, const std::vector<TrajectoryRecord>& records, double eta, std::size_t n);

}  // namespace eos
