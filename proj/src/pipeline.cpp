#include "nuseg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "nuseg/adaptive_threshold.hpp"
#include "nuseg/blockgrid.hpp"
#include "nuseg/instancemorph.hpp"
#include "nuseg/stain.hpp"

namespace nuseg {
namespace {

/// Nearest-rank percentile of an 8-bit plane.
uint8_t plane_percentile(const GrayU8& plane, double pct) {
    std::array<int64_t, 256> hist{};
    for (uint8_t v : plane.data) ++hist[v];
    const int64_t n = static_cast<int64_t>(plane.data.size());
    const int64_t rank = std::llround(pct / 100.0 * (n - 1));
    int64_t cum = 0;
    for (int v = 0; v < 256; ++v) {
        cum += hist[v];
        if (cum > rank) return static_cast<uint8_t>(v);
    }
    return 255;
}

template <typename F>
auto with_stage(const char* stage, F&& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(stage) + ": " + e.what());
    }
}

}  // namespace

StageOutputs run_pipeline(const RgbImage& img, const PipelineConfig& cfg) {
    validate_config(cfg);
    if (img.width <= 0 || img.height <= 0)
        throw std::runtime_error("pipeline: empty input image");

    const StainMatrix stains = with_stage("stain setup", [&] {
        return StainMatrix::from_columns(cfg.stain_matrix);
    });

    HImage himg = with_stage("stain projection", [&] {
        HImage h = deconvolve_h(img, stains);
        return enhance_contrast(h, cfg.contrast_lo_pct, cfg.contrast_hi_pct,
                                stains);
    });
    const GrayF l_ref = lab_lightness(img);

    // Blocks whose Hematoxylin range is nearly flat carry one class only;
    // their PCA intensity would be meaningless noise, so they are assigned
    // wholesale by their Hematoxylin level instead.
    const double homog_range = cfg.homog_range_fraction * 255.0;
    const uint8_t fg_level = plane_percentile(himg.h, cfg.homog_fg_percentile);

    const BlockGrid grid = decompose(img.width, img.height, cfg.block_size);
    Mask fg(img.width, img.height, 0);
    with_stage("block thresholding", [&] {
        for (int b = 0; b < grid.count(); ++b) {
            const BlockRect rect = grid.block(b);
            int hmin = 255, hmax = 0;
            int64_t hsum = 0;
            for (int y = rect.y0; y < rect.y0 + rect.h; ++y)
                for (int x = rect.x0; x < rect.x0 + rect.w; ++x) {
                    const int v = himg.h.at(x, y);
                    hmin = std::min(hmin, v);
                    hmax = std::max(hmax, v);
                    hsum += v;
                }
            if (hmax - hmin < homog_range) {
                const double mean =
                    static_cast<double>(hsum) / rect.pixel_count();
                if (mean > fg_level)
                    for (int y = rect.y0; y < rect.y0 + rect.h; ++y)
                        for (int x = rect.x0; x < rect.x0 + rect.w; ++x)
                            fg.at(x, y) = 1;
                continue;
            }
            const IntensityBlock ib =
                block_pca_intensity(himg.recolored, l_ref, rect);
            const BlockHistogram hist =
                build_histogram(ib, cfg.bins, cfg.smooth_radius);
            BimodalFit fit =
                find_peaks(hist, cfg.prominence, cfg.min_separation);
            if (fit.mode == ThresholdMode::bimodal)
                fit = correct_threshold(fit, cfg.lambda);
            const Mask local = binarize_block(ib, fit);
            for (int y = 0; y < rect.h; ++y)
                for (int x = 0; x < rect.w; ++x)
                    fg.at(rect.x0 + x, rect.y0 + y) = local.at(x, y);
        }
        return 0;
    });

    StageOutputs out;
    out.s1m12 = with_stage("size/shape cleanup", [&] {
        LabelMap map = label_components(fg);
        const SizePrior prior = compute_size_prior(map, cfg.min_area_floor,
                                                   cfg.min_area_fraction);
        map = remove_small(map, prior);
        SplitParams split;
        split.solidity_split = cfg.solidity_split;
        split.defect_depth_fraction = cfg.defect_depth_fraction;
        split.max_depth = cfg.split_max_depth;
        map = split_convexity(map, split);
        return fill_holes(map);
    });

    out.s1m123 = with_stage("false-positive removal", [&] {
        FpParams params;
        params.tile_size = cfg.tile_size;
        params.gamma = cfg.gamma;
        params.t_s = cfg.t_s;
        params.feature_scale = cfg.feature_scale;
        params.min_reference_count = cfg.min_reference_count;
        FpResult r = score_and_filter(out.s1m12, img, params);
        out.fp_decisions = std::move(r.decisions);
        return std::move(r.map);
    });

    out.final_map = with_stage("self-training", [&] {
        Stage2Result r = stage2_pass(out.s1m123, himg.recolored,
                                     cfg.tile_size, cfg.tau_flip,
                                     cfg.min_class_pixels);
        out.relabel_report = std::move(r.report);
        RefineParams refine;
        refine.split.solidity_split = cfg.solidity_split;
        refine.split.defect_depth_fraction = cfg.defect_depth_fraction;
        refine.split.max_depth = cfg.split_max_depth;
        refine.area_floor = cfg.min_area_floor;
        refine.area_fraction = cfg.min_area_fraction;
        refine.solidity_hull_replace = cfg.solidity_hull_replace;
        return refine_shapes(r.map, refine);
    });
    return out;
}

}  // namespace nuseg
