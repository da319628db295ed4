#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nuseg/image.hpp"

namespace nuseg {

/// Two-class Gaussian generative pixel classifier over 3-channel color in
/// [0,1], with ridge-regularized covariances and pseudo-label class priors.
struct PixelClassifier {
    struct ClassModel {
        std::array<double, 3> mean{};
        std::array<double, 9> cov{};  // row-major, after ridge
        double prior = 0.5;
        // Cached scoring terms.
        std::array<double, 9> cov_inv{};
        double log_norm = 0.0;  // log prior - 0.5 log det cov
    };
    ClassModel background;  // pseudo-label 0
    ClassModel foreground;  // pseudo-label 1

    /// Posterior probability of the foreground class for one color.
    double posterior_fg(const std::array<double, 3>& color) const;
};

/// Maximum-likelihood class-conditional Gaussians plus a 1e-4 diagonal
/// ridge. Returns nothing when either class has fewer than min_class_pixels
/// samples; such tiles keep their pseudo-labels.
std::optional<PixelClassifier> fit_tile(
    const std::vector<std::array<double, 3>>& colors,
    const std::vector<uint8_t>& pseudo, int min_class_pixels);

/// Flip a pixel's pseudo-label only when the classifier prefers the other
/// class with posterior >= tau_flip. tau_flip >= 1 disables flipping.
std::vector<uint8_t> relabel_uncertain(
    const PixelClassifier& clf, const std::vector<std::array<double, 3>>& colors,
    const std::vector<uint8_t>& pseudo, double tau_flip);

struct TileReport {
    int tile = 0;
    int64_t fg_to_bg = 0;
    int64_t bg_to_fg = 0;
    std::string skip_reason;  // empty when the tile was trained
};

struct RelabelReport {
    std::vector<TileReport> tiles;
};

struct Stage2Result {
    LabelMap map;
    RelabelReport report;
};

/// Per-tile self-supervision over the recolored Hematoxylin image: fit on
/// the stage-1 pseudo-labels, relabel confident disagreements, then relabel
/// connected components globally on the merged binary result.
Stage2Result stage2_pass(const LabelMap& map, const RgbImage& colors,
                         int tile_size, double tau_flip, int min_class_pixels);

}  // namespace nuseg
