#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "nuseg/image.hpp"
#include "nuseg/instancemorph.hpp"

namespace nuseg {

/// Tiling used for local false-positive statistics; instances belong to the
/// tile containing their centroid.
struct TileGrid {
    int width = 0;
    int height = 0;
    int tile_size = 0;
    int tiles_x = 0;
    int tiles_y = 0;

    int count() const { return tiles_x * tiles_y; }
    int tile_of(double cx, double cy) const;
};

TileGrid make_tile_grid(int width, int height, int tile_size);

/// Per-instance appearance summary, every component in [0,1]: mean HSV over
/// the instance plus the V standard deviation over the instance and a 2-px
/// outer ring (normalized by 0.5, the largest possible std of a [0,1]
/// variable).
struct InstanceFeatures {
    double mean_h = 0.0;
    double mean_s = 0.0;
    double mean_v = 0.0;
    double contrast = 0.0;
};

InstanceFeatures compute_features(const RgbImage& rgb, const LabelMap& map,
                                  const Instance& ins);

/// Indices into the scored instance list, split by area: strictly above the
/// threshold goes to the reference set, the rest to the query set.
struct SetAssignment {
    std::vector<size_t> reference;
    std::vector<size_t> query;
};

SetAssignment assign_sets(const std::vector<int64_t>& areas,
                          double size_threshold);

/// Componentwise mean of the reference features. Throws std::logic_error on
/// an empty list (callers skip such tiles instead).
InstanceFeatures aggregate_reference(const std::vector<InstanceFeatures>& refs);

/// Gaussian similarity kernel exp(-gamma * ||a - b||^2).
double similarity(const InstanceFeatures& a, const InstanceFeatures& b,
                  double gamma);

struct FpDecision {
    int tile = 0;
    uint32_t id = 0;
    bool in_reference = false;
    std::optional<double> score;  // query instances in scored tiles only
    bool removed = false;
};

struct FpParams {
    int tile_size = 200;
    double gamma = 0.1;
    double t_s = 0.6;
    double feature_scale = 8.0;  // expands [0,1] features before the kernel
    int min_reference_count = 2;
};

struct FpResult {
    LabelMap map;
    std::vector<FpDecision> decisions;
};

/// Remove suspect small instances tile by tile: instances above the
/// image-wide median area form the reference set; query instances whose
/// scaled-feature similarity to the reference mean falls below t_s are
/// erased. Tiles with fewer than min_reference_count references are skipped.
/// Surviving instances keep their ids.
FpResult score_and_filter(const LabelMap& map, const RgbImage& rgb,
                          const FpParams& params);

}  // namespace nuseg
