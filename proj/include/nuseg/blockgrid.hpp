#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "nuseg/image.hpp"

namespace nuseg {

/// One rectangle of an origin-aligned block tiling.
struct BlockRect {
    int x0 = 0;
    int y0 = 0;
    int w = 0;
    int h = 0;

    int pixel_count() const { return w * h; }
};

/// Non-overlapping tiling of a width x height image into blocks of at most
/// block_size pixels per side. Edge blocks shrink; order is row-major.
struct BlockGrid {
    int width = 0;
    int height = 0;
    int block_size = 0;
    int blocks_x = 0;
    int blocks_y = 0;

    int count() const { return blocks_x * blocks_y; }
    BlockRect block(int index) const;
};

BlockGrid decompose(int width, int height, int block_size);

/// Scalar intensity for one block: the leading principal component of the
/// block's colors, sign-matched to lightness and rescaled to [0,1].
struct IntensityBlock {
    BlockRect rect;
    std::vector<double> intensity;  // row-major within rect, values in [0,1]
    std::array<double, 3> eigenvector{};
    bool sign_flipped = false;
    bool flat = false;  // zero-variance block; intensity pinned at 0.5

    double at(int bx, int by) const { return intensity[by * rect.w + bx]; }
};

/// Compute the block's PCA intensity from `img` colors inside `rect`, using
/// the co-located `l_ref` lightness plane to orient the eigenvector so that
/// higher intensity means lighter pixels.
IntensityBlock block_pca_intensity(const RgbImage& img, const GrayF& l_ref,
                                   const BlockRect& rect);

}  // namespace nuseg
