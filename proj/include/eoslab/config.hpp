#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eoslab/tracker.hpp"

namespace eos {

struct SweepAxis {
    std::string param;  // e.g. width, data.n
    std::vector<std::string> values;
};

struct ExperimentConfig {
    RunConfig run;
    std::string output_dir = "out";
    bool emit_plots = true;
    std::vector<std::string> verify_checks;  // empty: all
    std::optional<SweepAxis> sweep;
    std::string source;  // file the config came from
};

// key=value lines, [data] [output] [sweep] sections, '#' comments.
// "preset = name" pulls in a bundled preset before the remaining keys apply.
ExperimentConfig parse_config(const std::string& text, const std::string& baseDir = ".");
ExperimentConfig load_config(const std::string& pathOrPreset);

// applies one key; section is "" for top level
void set_key(ExperimentConfig& cfg, const std::string& section, const std::string& key, const std::string& value,
             const std::string& baseDir = ".");

std::string preset_dir();
std::vector<std::string> preset_names();

}  // namespace eos
