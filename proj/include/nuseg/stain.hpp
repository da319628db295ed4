#pragma once

#include <array>
#include <string>

#include "nuseg/image.hpp"

namespace nuseg {

/// Optical-density stain basis: three unit column vectors (hematoxylin,
/// eosin, residual), stored column-major.
struct StainMatrix {
    std::array<double, 9> columns{};

    /// Widely used default H&E basis; residual completes the frame.
    static StainMatrix standard_he();

    /// Build from nine column-major values. Columns are normalized to unit
    /// length; an all-zero third column is replaced by the normalized cross
    /// product of the first two. Throws std::runtime_error if the resulting
    /// matrix is close to singular.
    static StainMatrix from_columns(const std::array<double, 9>& cols);
};

/// Hematoxylin view of a slide. `h` is the per-pixel H concentration rescaled
/// to 8 bits, `recolored` the 3-channel reconstruction from the H component
/// alone, and `od_scale` the concentration that maps to h = 255.
struct HImage {
    GrayU8 h;
    RgbImage recolored;
    double od_scale = 1.0;
};

/// Per-pixel stain concentrations (H, E, residual), unclamped.
/// OD per channel is -ln((I+1)/256); concentrations come from the inverted
/// stain matrix.
std::array<GrayF, 3> deconvolve_concentrations(const RgbImage& img,
                                               const StainMatrix& stains);

/// Project onto the hematoxylin channel: concentrations clamped at zero,
/// rescaled by the image-wide maximum to [0,255], plus the H-only recoloring.
HImage deconvolve_h(const RgbImage& img, const StainMatrix& stains);

/// Linear percentile stretch of the H channel: lo_pct maps to 0 and hi_pct
/// to 255, clamped. The recoloring is rebuilt from the stretched channel.
/// Constant images come back unchanged.
HImage enhance_contrast(const HImage& himg, double lo_pct, double hi_pct,
                        const StainMatrix& stains);

/// CIELAB L* per pixel (standard sRGB white point), scaled to [0,255].
GrayF lab_lightness(const RgbImage& img);

}  // namespace nuseg
