#include "eoslab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace eos {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(v);
    while (std::getline(is, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    double x = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t x = 0;
    auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::size_t> to_uints(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& s : split_list(v)) out.push_back(to_uint(key, s));
    return out;
}

void set_data_key(DataSpec& d, const std::string& key, const std::string& v, const std::string& baseDir) {
    if (key == "source") d.source = v;
    else if (key == "n") d.n = to_uint(key, v);
    else if (key == "d") d.d = to_uint(key, v);
    else if (key == "rank") d.rank = to_uint(key, v);
    else if (key == "top") d.top = to_double(key, v);
    else if (key == "gap") d.gap = to_double(key, v);
    else if (key == "ratio") d.ratio = to_double(key, v);
    else if (key == "spectrum") {
        d.spectrum.clear();
        for (const auto& s : split_list(v)) d.spectrum.push_back(to_double(key, s));
    } else if (key == "labels") d.labels = v;
    else if (key == "align_index") d.align_index = to_uint(key, v);
    else if (key == "kappa") d.kappa = to_double(key, v);
    else if (key == "sign_labels") d.sign_labels = to_bool(key, v);
    else if (key == "csv_path") d.csv_path = fs::path(v).is_absolute() ? v : (fs::path(baseDir) / v).string();
    else if (key == "csv_header") d.csv_header = to_bool(key, v);
    else if (key == "mean_subtract") d.mean_subtract = to_bool(key, v);
    else if (key == "seed") d.seed = to_uint(key, v);
    else throw ConfigError("unknown key 'data." + key + "'");
}

void set_run_key(RunConfig& c, const std::string& key, const std::string& v) {
    if (key == "model") {
        if (v == "twolayer") c.model = ModelKind::TwoLayer;
        else if (v == "mlp") c.model = ModelKind::Mlp;
        else throw ConfigError("model must be twolayer or mlp, got '" + v + "'");
    } else if (key == "width") c.width = to_uint(key, v);
    else if (key == "w_scale") c.w_scale = to_double(key, v);
    else if (key == "hidden") c.hidden = to_uints(key, v);
    else if (key == "activation") {
        try {
            c.activation = parse_activation(v);
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    } else if (key == "init_scale") c.init_scale = to_double(key, v);
    else if (key == "eta") c.eta = to_double(key, v);
    else if (key == "eta_fraction") c.eta_fraction = to_double(key, v);
    else if (key == "steps") c.steps = to_uint(key, v);
    else if (key == "seed") c.seed = to_uint(key, v);
    else if (key == "freeze_depth") c.freeze_depth = to_uint(key, v);
    else if (key == "measure_every") c.measure_every = to_uint(key, v);
    else if (key == "v1_source") {
        if (v == "gram") c.v1_source = V1Source::Gram;
        else if (v == "data_x" || v == "dataX") c.v1_source = V1Source::DataX;
        else throw ConfigError("v1_source must be gram or data_x, got '" + v + "'");
    } else if (key == "relaxed_ps_indices") c.relaxed_ps_indices = to_uints(key, v);
    else if (key == "relaxed_ps_steps") c.relaxed_ps_steps = to_uint(key, v);
    else if (key == "smooth_window") c.smooth_window = to_uint(key, v);
    else if (key == "min_len") c.min_len = to_uint(key, v);
    else if (key == "growth_c") c.growth_c = to_double(key, v);
    else if (key == "dfpos_trials") c.dfpos_trials = to_uint(key, v);
    else throw ConfigError("unknown key '" + key + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void apply_text(ExperimentConfig& cfg, const std::string& text, const std::string& baseDir, int depth);

void apply_preset(ExperimentConfig& cfg, const std::string& name, int depth) {
    if (depth > 4) throw ConfigError("preset nesting too deep");
    fs::path p = fs::path(preset_dir()) / (name + ".cfg");
    if (!fs::exists(p)) throw ConfigError("unknown preset '" + name + "'");
    apply_text(cfg, read_file(p.string()), p.parent_path().string(), depth + 1);
}

void apply_text(ExperimentConfig& cfg, const std::string& text, const std::string& baseDir, int depth) {
    std::istringstream is(text);
    std::string line, section;
    int lineNo = 0;
    while (std::getline(is, line)) {
        ++lineNo;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineNo) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "run" && section != "data" && section != "output" && section != "sweep")
                throw ConfigError("line " + std::to_string(lineNo) + ": unknown section '" + section + "'");
            if (section == "run") section.clear();
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineNo) + ": expected key = value");
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        try {
            if (section.empty() && key == "preset") apply_preset(cfg, val, depth);
            else set_key(cfg, section, key, val, baseDir);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineNo) + ": " + e.what());
        }
    }
}

}  // namespace

void set_key(ExperimentConfig& cfg, const std::string& section, const std::string& key, const std::string& value,
             const std::string& baseDir) {
    if (section.empty()) {
        auto dot = key.find('.');
        if (dot != std::string::npos) {
            set_key(cfg, key.substr(0, dot), key.substr(dot + 1), value, baseDir);
            return;
        }
        set_run_key(cfg.run, key, value);
    } else if (section == "data") {
        set_data_key(cfg.run.data, key, value, baseDir);
    } else if (section == "output") {
        if (key == "output_dir") cfg.output_dir = value;
        else if (key == "emit_plots") cfg.emit_plots = to_bool(key, value);
        else if (key == "verify_checks") cfg.verify_checks = split_list(value);
        else throw ConfigError("unknown key 'output." + key + "'");
    } else if (section == "sweep") {
        if (!cfg.sweep) cfg.sweep = SweepAxis{};
        if (key == "param") cfg.sweep->param = value;
        else if (key == "values") cfg.sweep->values = split_list(value);
        else throw ConfigError("unknown key 'sweep." + key + "'");
    } else {
        throw ConfigError("unknown section '" + section + "'");
    }
}

ExperimentConfig parse_config(const std::string& text, const std::string& baseDir) {
    ExperimentConfig cfg;
    apply_text(cfg, text, baseDir, 0);
    return cfg;
}

ExperimentConfig load_config(const std::string& pathOrPreset) {
    ExperimentConfig cfg;
    if (fs::exists(pathOrPreset) && fs::is_regular_file(pathOrPreset)) {
        fs::path p(pathOrPreset);
        apply_text(cfg, read_file(p.string()), p.parent_path().empty() ? "." : p.parent_path().string(), 0);
    } else {
        apply_preset(cfg, pathOrPreset, 0);
    }
    cfg.source = pathOrPreset;
    return cfg;
}

std::string preset_dir() {
    if (const char* env = std::getenv("EOS_LAB_PRESETS")) return env;
    return EOSLAB_PRESET_DIR;
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    if (!fs::exists(preset_dir())) return out;
    for (const auto& e : fs::directory_iterator(preset_dir()))
        if (e.path().extension() == ".cfg") out.push_back(e.path().stem().string());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace eos
