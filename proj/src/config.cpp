#include "gescd/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "gescd/error.hpp"

namespace gescd {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

}  // namespace

Config::Config() {
    defaults_ = {
        // backend
        {"backend", "synthetic"},
        {"weights_path", ""},
        {"facet_layer", "-1"},  // -1: use the backend default
        {"facet_kind", "key"},
        {"input_size", "512"},
        // proposer
        {"proposer.points_per_side", "32"},
        {"proposer.nms_threshold", "0.7"},
        {"proposer.predicted_iou_threshold", "0.7"},
        {"proposer.stability_threshold", "0.7"},
        // registration
        {"register", "none"},
        {"ransac.max_iterations", "2000"},
        {"ransac.inlier_threshold", "3.0"},
        {"ransac.min_inliers", "12"},
        {"seed", "42"},
        // adaptive threshold
        {"threshold.b_right", "0.05"},
        {"threshold.s_right", "0.1"},
        {"threshold.b_left", "0.7"},
        {"threshold.s_left", "1.0"},
        {"threshold.c", "1.0"},
        {"threshold.skew_band", "0.2"},
        {"threshold.z_value", "-0.52"},
        // mask matching
        {"match.alpha_t", "0.65"},
        {"match.confidence", "0.88"},
        {"match.fallback_pseudo", "false"},
        {"match.ssm_layer", "last"},
        // data / evaluation
        {"data.layout", "scd"},
        {"eval.gt", "fwd"},
        {"eval.average", "macro"},
        {"eval.threads", "1"},
    };
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    Config cfg;
    cfg.parse(buf.str());
    return cfg;
}

void Config::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw Error(ErrorCode::InvalidArgument,
                            "malformed section header at line " + std::to_string(lineno));
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorCode::InvalidArgument,
                        "expected key = value at line " + std::to_string(lineno));
        std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw Error(ErrorCode::InvalidArgument, "empty key at line " + std::to_string(lineno));
        if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
        set(key, value);
    }
}

void Config::set(const std::string& key, const std::string& value) {
    if (defaults_.find(key) == defaults_.end())
        throw Error(ErrorCode::InvalidArgument, "unknown config key: " + key);
    values_[key] = value;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    auto dit = defaults_.find(key);
    if (dit == defaults_.end())
        throw Error(ErrorCode::InvalidArgument, "unknown config key: " + key);
    return dit->second;
}

double Config::get_double(const std::string& key) const {
    const std::string v = get(key);
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "config key " + key + " is not a number: " + v);
    }
}

int Config::get_int(const std::string& key) const {
    const std::string v = get(key);
    try {
        std::size_t pos = 0;
        const int i = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return i;
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "config key " + key + " is not an integer: " + v);
    }
}

bool Config::get_bool(const std::string& key) const {
    std::string v = get(key);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error(ErrorCode::InvalidArgument, "config key " + key + " is not a boolean: " + v);
}

std::map<std::string, std::string> Config::snapshot() const {
    std::map<std::string, std::string> snap = defaults_;
    for (const auto& [k, v] : values_) snap[k] = v;
    return snap;
}

}  // namespace gescd
