#include "nuseg/selftrain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "nuseg/fp_filter.hpp"  // TileGrid
#include "nuseg/instancemorph.hpp"

namespace nuseg {
namespace {

constexpr double kRidge = 1e-4;

PixelClassifier::ClassModel fit_class(
    const std::vector<std::array<double, 3>>& colors,
    const std::vector<uint8_t>& pseudo, uint8_t cls, double prior) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    int64_t n = 0;
    for (size_t i = 0; i < colors.size(); ++i) {
        if ((pseudo[i] != 0) != (cls != 0)) continue;
        mean += Eigen::Vector3d(colors[i][0], colors[i][1], colors[i][2]);
        ++n;
    }
    mean /= static_cast<double>(n);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (size_t i = 0; i < colors.size(); ++i) {
        if ((pseudo[i] != 0) != (cls != 0)) continue;
        const Eigen::Vector3d d =
            Eigen::Vector3d(colors[i][0], colors[i][1], colors[i][2]) - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(n);
    cov += kRidge * Eigen::Matrix3d::Identity();

    PixelClassifier::ClassModel m;
    const Eigen::Matrix3d inv = cov.inverse();
    for (int r = 0; r < 3; ++r) {
        m.mean[r] = mean[r];
        for (int c = 0; c < 3; ++c) {
            m.cov[3 * r + c] = cov(r, c);
            m.cov_inv[3 * r + c] = inv(r, c);
        }
    }
    m.prior = prior;
    m.log_norm = std::log(prior) - 0.5 * std::log(cov.determinant());
    return m;
}

double log_score(const PixelClassifier::ClassModel& m,
                 const std::array<double, 3>& color) {
    const Eigen::Vector3d d(color[0] - m.mean[0], color[1] - m.mean[1],
                            color[2] - m.mean[2]);
    Eigen::Matrix3d inv;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) inv(r, c) = m.cov_inv[3 * r + c];
    return m.log_norm - 0.5 * d.dot(inv * d);
}

}  // namespace

double PixelClassifier::posterior_fg(const std::array<double, 3>& color) const {
    const double lf = log_score(foreground, color);
    const double lb = log_score(background, color);
    // Softmax of two log scores, computed stably.
    const double mx = std::max(lf, lb);
    const double ef = std::exp(lf - mx);
    const double eb = std::exp(lb - mx);
    return ef / (ef + eb);
}

std::optional<PixelClassifier> fit_tile(
    const std::vector<std::array<double, 3>>& colors,
    const std::vector<uint8_t>& pseudo, int min_class_pixels) {
    int64_t n_fg = 0;
    for (uint8_t v : pseudo) n_fg += v != 0;
    const int64_t n_bg = static_cast<int64_t>(pseudo.size()) - n_fg;
    if (n_fg < min_class_pixels || n_bg < min_class_pixels)
        return std::nullopt;
    PixelClassifier clf;
    const double total = static_cast<double>(pseudo.size());
    clf.foreground = fit_class(colors, pseudo, 1, n_fg / total);
    clf.background = fit_class(colors, pseudo, 0, n_bg / total);
    return clf;
}

std::vector<uint8_t> relabel_uncertain(
    const PixelClassifier& clf,
    const std::vector<std::array<double, 3>>& colors,
    const std::vector<uint8_t>& pseudo, double tau_flip) {
    std::vector<uint8_t> out = pseudo;
    if (tau_flip >= 1.0) return out;  // conservative limit: identity
    for (size_t i = 0; i < colors.size(); ++i) {
        const double p_fg = clf.posterior_fg(colors[i]);
        const double p_other = pseudo[i] ? 1.0 - p_fg : p_fg;
        if (p_other >= tau_flip) out[i] = pseudo[i] ? 0 : 1;
    }
    return out;
}

Stage2Result stage2_pass(const LabelMap& map, const RgbImage& colors,
                         int tile_size, double tau_flip,
                         int min_class_pixels) {
    const TileGrid grid = make_tile_grid(map.width, map.height, tile_size);
    Mask merged(map.width, map.height, 0);
    Stage2Result out;
    for (int t = 0; t < grid.count(); ++t) {
        const int tx = t % grid.tiles_x, ty = t / grid.tiles_x;
        const int x0 = tx * tile_size, y0 = ty * tile_size;
        const int x1 = std::min(map.width, x0 + tile_size);
        const int y1 = std::min(map.height, y0 + tile_size);
        std::vector<std::array<double, 3>> tile_colors;
        std::vector<uint8_t> tile_pseudo;
        tile_colors.reserve(static_cast<size_t>(x1 - x0) * (y1 - y0));
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
                tile_colors.push_back({colors.at(x, y, 0) / 255.0,
                                       colors.at(x, y, 1) / 255.0,
                                       colors.at(x, y, 2) / 255.0});
                tile_pseudo.push_back(map.at(x, y) != 0 ? 1 : 0);
            }
        TileReport rep;
        rep.tile = t;
        const auto clf = fit_tile(tile_colors, tile_pseudo, min_class_pixels);
        std::vector<uint8_t> labels;
        if (clf) {
            labels = relabel_uncertain(*clf, tile_colors, tile_pseudo,
                                       tau_flip);
            for (size_t i = 0; i < labels.size(); ++i) {
                if (labels[i] == tile_pseudo[i]) continue;
                if (tile_pseudo[i])
                    ++rep.fg_to_bg;
                else
                    ++rep.bg_to_fg;
            }
        } else {
            labels = tile_pseudo;
            rep.skip_reason = "class below min_class_pixels";
        }
        size_t i = 0;
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x, ++i) merged.at(x, y) = labels[i];
        out.report.tiles.push_back(std::move(rep));
    }
    out.map = label_components(merged);
    return out;
}

}  // namespace nuseg
