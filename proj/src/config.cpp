#include "nuseg/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace nuseg {
namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw std::runtime_error("config key '" + key + "': bad value '" + value +
                             "'");
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const int v = std::stoi(value, &pos);
        if (trim(value.substr(pos)).empty()) return v;
    } catch (const std::exception&) {
    }
    bad_value(key, value);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (trim(value.substr(pos)).empty()) return v;
    } catch (const std::exception&) {
    }
    bad_value(key, value);
}

std::array<double, 9> parse_matrix(const std::string& key,
                                   const std::string& value) {
    std::istringstream in(value);
    std::array<double, 9> m{};
    for (double& v : m)
        if (!(in >> v)) bad_value(key, value);
    std::string rest;
    if (in >> rest) bad_value(key, value);
    return m;
}

}  // namespace

const std::array<const char*, 24>& config_keys() {
    static const std::array<const char*, 24> keys = {
        "block_size",         "tile_size",
        "lambda",             "gamma",
        "t_s",                "feature_scale",
        "bins",               "smooth_radius",
        "prominence",         "min_separation",
        "contrast_lo_pct",    "contrast_hi_pct",
        "min_area_floor",     "min_area_fraction",
        "solidity_split",     "defect_depth_fraction",
        "solidity_hull_replace", "split_max_depth",
        "min_reference_count",   "tau_flip",
        "min_class_pixels",   "homog_range_fraction",
        "homog_fg_percentile", "stain_matrix"};
    return keys;
}

void set_config_key(PipelineConfig& cfg, const std::string& key,
                    const std::string& value) {
    if (key == "block_size")
        cfg.block_size = parse_int(key, value);
    else if (key == "tile_size")
        cfg.tile_size = parse_int(key, value);
    else if (key == "lambda")
        cfg.lambda = parse_double(key, value);
    else if (key == "gamma")
        cfg.gamma = parse_double(key, value);
    else if (key == "t_s")
        cfg.t_s = parse_double(key, value);
    else if (key == "feature_scale")
        cfg.feature_scale = parse_double(key, value);
    else if (key == "bins")
        cfg.bins = parse_int(key, value);
    else if (key == "smooth_radius")
        cfg.smooth_radius = parse_int(key, value);
    else if (key == "prominence")
        cfg.prominence = parse_double(key, value);
    else if (key == "min_separation")
        cfg.min_separation = parse_int(key, value);
    else if (key == "contrast_lo_pct")
        cfg.contrast_lo_pct = parse_double(key, value);
    else if (key == "contrast_hi_pct")
        cfg.contrast_hi_pct = parse_double(key, value);
    else if (key == "min_area_floor")
        cfg.min_area_floor = parse_double(key, value);
    else if (key == "min_area_fraction")
        cfg.min_area_fraction = parse_double(key, value);
    else if (key == "solidity_split")
        cfg.solidity_split = parse_double(key, value);
    else if (key == "defect_depth_fraction")
        cfg.defect_depth_fraction = parse_double(key, value);
    else if (key == "solidity_hull_replace")
        cfg.solidity_hull_replace = parse_double(key, value);
    else if (key == "split_max_depth")
        cfg.split_max_depth = parse_int(key, value);
    else if (key == "min_reference_count")
        cfg.min_reference_count = parse_int(key, value);
    else if (key == "tau_flip")
        cfg.tau_flip = parse_double(key, value);
    else if (key == "min_class_pixels")
        cfg.min_class_pixels = parse_int(key, value);
    else if (key == "homog_range_fraction")
        cfg.homog_range_fraction = parse_double(key, value);
    else if (key == "homog_fg_percentile")
        cfg.homog_fg_percentile = parse_double(key, value);
    else if (key == "stain_matrix")
        cfg.stain_matrix = parse_matrix(key, value);
    else
        throw std::runtime_error("unknown config key '" + key + "'");
}

PipelineConfig load_config_file(const std::string& path,
                                const PipelineConfig& base) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    PipelineConfig cfg = base;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 'key = value'");
        set_config_key(cfg, trim(line.substr(0, eq)),
                       trim(line.substr(eq + 1)));
    }
    return cfg;
}

void apply_env_overrides(PipelineConfig& cfg) {
    for (const char* key : config_keys()) {
        std::string env = "NUSEG_";
        for (const char* p = key; *p; ++p)
            env += static_cast<char>(std::toupper(*p));
        if (const char* value = std::getenv(env.c_str()))
            set_config_key(cfg, key, value);
    }
}

void validate_config(const PipelineConfig& cfg) {
    auto fail = [](const std::string& key, const std::string& why) {
        throw std::runtime_error("config key '" + key + "' " + why);
    };
    if (cfg.block_size < 8) fail("block_size", "must be >= 8");
    if (cfg.tile_size < 16) fail("tile_size", "must be >= 16");
    if (!(cfg.lambda > 0.0 && cfg.lambda < 1.0))
        fail("lambda", "must be in (0, 1)");
    if (!(cfg.gamma > 0.0)) fail("gamma", "must be > 0");
    if (!(cfg.t_s > 0.0 && cfg.t_s < 1.0)) fail("t_s", "must be in (0, 1)");
    if (!(cfg.feature_scale > 0.0)) fail("feature_scale", "must be > 0");
    if (cfg.bins < 16) fail("bins", "must be >= 16");
    if (cfg.smooth_radius < 0) fail("smooth_radius", "must be >= 0");
    if (!(cfg.prominence > 0.0 && cfg.prominence <= 1.0))
        fail("prominence", "must be in (0, 1]");
    if (cfg.min_separation < 1) fail("min_separation", "must be >= 1");
    if (!(cfg.contrast_lo_pct >= 0.0 &&
          cfg.contrast_lo_pct < cfg.contrast_hi_pct &&
          cfg.contrast_hi_pct <= 100.0))
        fail("contrast_lo_pct", "and contrast_hi_pct must satisfy 0 <= lo < "
                                "hi <= 100");
    if (cfg.min_area_floor < 0.0) fail("min_area_floor", "must be >= 0");
    if (!(cfg.min_area_fraction >= 0.0 && cfg.min_area_fraction <= 1.0))
        fail("min_area_fraction", "must be in [0, 1]");
    if (!(cfg.solidity_split > 0.0 && cfg.solidity_split <= 1.0))
        fail("solidity_split", "must be in (0, 1]");
    if (!(cfg.defect_depth_fraction > 0.0))
        fail("defect_depth_fraction", "must be > 0");
    if (!(cfg.solidity_hull_replace > 0.0 &&
          cfg.solidity_hull_replace <= 1.0))
        fail("solidity_hull_replace", "must be in (0, 1]");
    if (cfg.split_max_depth < 0) fail("split_max_depth", "must be >= 0");
    if (cfg.min_reference_count < 1)
        fail("min_reference_count", "must be >= 1");
    if (!(cfg.tau_flip > 0.5 && cfg.tau_flip <= 1.0))
        fail("tau_flip", "must be in (0.5, 1]");
    if (cfg.min_class_pixels < 4) fail("min_class_pixels", "must be >= 4");
    if (!(cfg.homog_range_fraction >= 0.0 && cfg.homog_range_fraction <= 1.0))
        fail("homog_range_fraction", "must be in [0, 1]");
    if (!(cfg.homog_fg_percentile >= 0.0 &&
          cfg.homog_fg_percentile <= 100.0))
        fail("homog_fg_percentile", "must be in [0, 100]");
}

}  // namespace nuseg
