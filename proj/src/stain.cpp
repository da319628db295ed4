#include "nuseg/stain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nuseg {
namespace {

Eigen::Matrix3d to_matrix(const std::array<double, 9>& cols) {
    Eigen::Matrix3d m;
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) m(r, c) = cols[3 * c + r];
    return m;
}

uint8_t quantize(double v) {
    return static_cast<uint8_t>(std::clamp(std::lround(v), 0l, 255l));
}

/// I = 256 * exp(-od) - 1, the inverse of od = -ln((I+1)/256).
uint8_t od_to_intensity(double od) {
    return quantize(256.0 * std::exp(-od) - 1.0);
}

RgbImage recolor_from_h(const GrayU8& h, double od_scale,
                        const StainMatrix& stains) {
    RgbImage out(h.width, h.height);
    // 256 possible h values; precompute the RGB for each.
    std::array<std::array<uint8_t, 3>, 256> lut;
    for (int v = 0; v < 256; ++v) {
        const double conc = v / 255.0 * od_scale;
        for (int c = 0; c < 3; ++c)
            lut[v][c] = od_to_intensity(conc * stains.columns[c]);
    }
    for (int y = 0; y < h.height; ++y)
        for (int x = 0; x < h.width; ++x) {
            const auto& rgb = lut[h.at(x, y)];
            out.set(x, y, rgb[0], rgb[1], rgb[2]);
        }
    return out;
}

}  // namespace

StainMatrix StainMatrix::standard_he() {
    return from_columns({0.650, 0.704, 0.286,   //
                         0.072, 0.990, 0.105,   //
                         0.0, 0.0, 0.0});
}

StainMatrix StainMatrix::from_columns(const std::array<double, 9>& cols) {
    Eigen::Matrix3d m = to_matrix(cols);
    if (m.col(2).norm() < 1e-12) m.col(2) = m.col(0).cross(m.col(1));
    for (int c = 0; c < 3; ++c) {
        const double n = m.col(c).norm();
        if (n < 1e-12)
            throw std::runtime_error("stain matrix: column " +
                                     std::to_string(c) + " is zero");
        m.col(c) /= n;
    }
    if (std::abs(m.determinant()) < 1e-6)
        throw std::runtime_error("stain matrix is singular");
    StainMatrix out;
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) out.columns[3 * c + r] = m(r, c);
    return out;
}

std::array<GrayF, 3> deconvolve_concentrations(const RgbImage& img,
                                               const StainMatrix& stains) {
    const Eigen::Matrix3d inv = to_matrix(stains.columns).inverse();
    std::array<GrayF, 3> out{GrayF(img.width, img.height),
                             GrayF(img.width, img.height),
                             GrayF(img.width, img.height)};
    // OD depends only on the 8-bit intensity; precompute.
    std::array<double, 256> od_lut;
    for (int v = 0; v < 256; ++v) od_lut[v] = -std::log((v + 1.0) / 256.0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const Eigen::Vector3d od(od_lut[img.at(x, y, 0)],
                                     od_lut[img.at(x, y, 1)],
                                     od_lut[img.at(x, y, 2)]);
            const Eigen::Vector3d conc = inv * od;
            for (int c = 0; c < 3; ++c) out[c].at(x, y) = conc[c];
        }
    return out;
}

HImage deconvolve_h(const RgbImage& img, const StainMatrix& stains) {
    auto conc = deconvolve_concentrations(img, stains);
    GrayF& hconc = conc[0];
    double maxc = 0.0;
    for (float& v : hconc.data) {
        v = std::max(v, 0.0f);
        maxc = std::max(maxc, static_cast<double>(v));
    }
    HImage out;
    out.od_scale = maxc > 0.0 ? maxc : 1.0;
    out.h = GrayU8(img.width, img.height);
    for (size_t i = 0; i < hconc.data.size(); ++i)
        out.h.data[i] = quantize(hconc.data[i] / out.od_scale * 255.0);
    out.recolored = recolor_from_h(out.h, out.od_scale, stains);
    return out;
}

HImage enhance_contrast(const HImage& himg, double lo_pct, double hi_pct,
                        const StainMatrix& stains) {
    std::array<int64_t, 256> hist{};
    for (uint8_t v : himg.h.data) ++hist[v];
    const int64_t n = static_cast<int64_t>(himg.h.data.size());
    auto value_at_rank = [&](double pct) {
        // Nearest-rank index into the (conceptually sorted) pixel values.
        const int64_t rank = std::llround(pct / 100.0 * (n - 1));
        int64_t cum = 0;
        for (int v = 0; v < 256; ++v) {
            cum += hist[v];
            if (cum > rank) return v;
        }
        return 255;
    };
    const int lo = value_at_rank(lo_pct);
    const int hi = value_at_rank(hi_pct);
    if (hi <= lo) return himg;  // flat image: nothing to stretch
    HImage out;
    out.od_scale = himg.od_scale;
    out.h = GrayU8(himg.h.width, himg.h.height);
    std::array<uint8_t, 256> lut;
    for (int v = 0; v < 256; ++v)
        lut[v] = quantize((v - lo) * 255.0 / (hi - lo));
    for (size_t i = 0; i < himg.h.data.size(); ++i)
        out.h.data[i] = lut[himg.h.data[i]];
    out.recolored = recolor_from_h(out.h, out.od_scale, stains);
    return out;
}

GrayF lab_lightness(const RgbImage& img) {
    // sRGB -> linear -> Y (D65) -> L*, scaled so 100 -> 255.
    std::array<double, 256> lin;
    for (int v = 0; v < 256; ++v) {
        const double s = v / 255.0;
        lin[v] = s <= 0.04045 ? s / 12.92 : std::pow((s + 0.055) / 1.055, 2.4);
    }
    GrayF out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double yrel = 0.2126 * lin[img.at(x, y, 0)] +
                                0.7152 * lin[img.at(x, y, 1)] +
                                0.0722 * lin[img.at(x, y, 2)];
            const double f = yrel > 0.008856 ? std::cbrt(yrel)
                                             : 7.787 * yrel + 16.0 / 116.0;
            const double lstar = 116.0 * f - 16.0;
            out.at(x, y) = std::clamp(lstar, 0.0, 100.0) * 2.55;
        }
    return out;
}

}  // namespace nuseg
