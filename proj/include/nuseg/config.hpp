#pragma once

#include <array>
#include <string>

namespace nuseg {

/// Every pipeline tunable with its default. Stage-specific structs are built
/// from this at run time; the size prior and the reference/query area split
/// stay data-driven and have no keys here.
struct PipelineConfig {
    int block_size = 50;
    int tile_size = 200;
    double lambda = 0.3;  // threshold correction weight
    double gamma = 0.1;   // similarity kernel width
    double t_s = 0.6;     // similarity removal threshold
    double feature_scale = 8.0;

    int bins = 64;
    int smooth_radius = 2;
    double prominence = 0.1;
    int min_separation = 8;
    double contrast_lo_pct = 1.0;
    double contrast_hi_pct = 99.0;

    double min_area_floor = 30.0;
    double min_area_fraction = 0.2;
    double solidity_split = 0.95;
    double defect_depth_fraction = 0.10;
    double solidity_hull_replace = 0.7;
    int split_max_depth = 3;

    int min_reference_count = 2;
    double tau_flip = 0.9;
    int min_class_pixels = 50;

    double homog_range_fraction = 0.25;
    double homog_fg_percentile = 90.0;

    // Column-major H, E, residual; an all-zero residual is derived as the
    // normalized cross product of the first two columns.
    std::array<double, 9> stain_matrix = {0.650, 0.704, 0.286,  //
                                          0.072, 0.990, 0.105,  //
                                          0.0,   0.0,   0.0};
};

/// Set one key from its textual value. Throws std::runtime_error naming the
/// key on unknown keys or unparsable values.
void set_config_key(PipelineConfig& cfg, const std::string& key,
                    const std::string& value);

/// Flat `key = value` file, one per line, `#` comments, later duplicates
/// win. Throws with the offending line/key on any error.
PipelineConfig load_config_file(const std::string& path,
                                const PipelineConfig& base = {});

/// Apply NUSEG_<KEY> environment overrides (key upper-cased) for every
/// documented key.
void apply_env_overrides(PipelineConfig& cfg);

/// Check every numeric range; throws std::runtime_error naming the first
/// offending key.
void validate_config(const PipelineConfig& cfg);

/// The documented key list (stable order, for help output and env scanning).
const std::array<const char*, 24>& config_keys();

}  // namespace nuseg
