#pragma once

#include <cstdint>
#include <vector>

#include "nuseg/geometry.hpp"
#include "nuseg/image.hpp"

namespace nuseg {

/// One labeled component with its derived shape summary. Pixels are linear
/// raster indices (y * width + x) in ascending order. The hull is built from
/// the corners of boundary pixels, so hull area >= pixel count and solidity
/// never exceeds 1.
struct Instance {
    uint32_t id = 0;
    std::vector<int64_t> pixels;
    std::vector<int64_t> boundary;  // pixels with a 4-neighbor outside
    Vec2 centroid{};
    std::vector<Vec2> hull;  // convex hull of boundary pixel corners, CCW
    double hull_area = 0.0;
    double solidity = 1.0;

    int64_t area() const { return static_cast<int64_t>(pixels.size()); }
};

/// All instances of a label map in ascending id order, shapes included.
std::vector<Instance> collect_instances(const LabelMap& map);

/// Image-wide instance size statistics driving small-instance removal.
struct SizePrior {
    std::vector<int64_t> areas;  // ascending id order
    double median_area = 0.0;
    double min_area = 0.0;  // max(area_floor, area_fraction * median)
};

SizePrior compute_size_prior(const LabelMap& map, double area_floor,
                             double area_fraction);

/// 8-connected components of the foreground, ids assigned in raster-scan
/// order of each component's first pixel.
LabelMap label_components(const Mask& mask);

/// Erase components with area < prior.min_area and re-compact the surviving
/// ids to 1..k in ascending original-id order.
LabelMap remove_small(const LabelMap& map, const SizePrior& prior);

/// Absorb background regions that do not touch the image border (4-connected
/// background) and are bounded by exactly one instance id. Holes bordering
/// two ids are ambiguous and stay open.
LabelMap fill_holes(const LabelMap& map);

struct SplitParams {
    double solidity_split = 0.95;        // analyze instances below this
    double defect_depth_fraction = 0.10;  // of the equivalent diameter
    int max_depth = 3;                    // recursive split limit
};

/// Split low-solidity instances along the line joining their two deepest
/// convexity defects (boundary points farthest inside the hull, one per hull
/// edge). The cut line is 4-connected and extended until it exits the
/// instance; cut pixels become background. The larger side keeps the id, the
/// rest get fresh ids. Cuts that fail to disconnect are reverted.
LabelMap split_convexity(const LabelMap& map, const SplitParams& params);

struct RefineParams {
    SplitParams split;
    double area_floor = 30.0;
    double area_fraction = 0.2;
    double solidity_hull_replace = 0.7;
};

/// Stage-2 shape cleanup: per-instance morphological opening (radius-1
/// disk), hole filling, convexity splitting, small-instance removal, then
/// replacement of still-ragged instances (solidity < solidity_hull_replace)
/// by their rasterized convex hull on pixels no other instance owns.
LabelMap refine_shapes(const LabelMap& map, const RefineParams& params);

}  // namespace nuseg
