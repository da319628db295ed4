#include "nuseg/adaptive_threshold.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nuseg {
namespace {

std::vector<HistPeak> plateau_maxima(const std::vector<double>& occ) {
    const int n = static_cast<int>(occ.size());
    std::vector<HistPeak> peaks;
    int s = 0;
    while (s < n) {
        int e = s;
        while (e + 1 < n && occ[e + 1] == occ[s]) ++e;
        const bool left_lower = s == 0 || occ[s - 1] < occ[s];
        const bool right_lower = e == n - 1 || occ[e + 1] < occ[s];
        if (left_lower && right_lower && occ[s] > 0.0) {
            HistPeak p;
            p.bin = (s + e) / 2;  // middle of the plateau
            p.h = occ[s];
            peaks.push_back(p);
        }
        s = e + 1;
    }
    return peaks;
}

/// Height above the higher of the two flanking minima; the flanking minimum
/// on a side is taken between the peak and the nearest strictly-higher bin,
/// or 0 when no higher bin exists on that side.
double topographic_prominence(const std::vector<double>& occ, int bin) {
    const double v = occ[bin];
    auto side_ref = [&](int step) {
        double mn = v;
        for (int i = bin + step; i >= 0 && i < static_cast<int>(occ.size());
             i += step) {
            if (occ[i] > v) return mn;
            mn = std::min(mn, occ[i]);
        }
        return 0.0;
    };
    return v - std::max(side_ref(-1), side_ref(+1));
}

}  // namespace

BlockHistogram build_histogram(const IntensityBlock& block, int bins,
                               int smooth_radius) {
    if (bins < 16) throw std::invalid_argument("build_histogram: bins < 16");
    BlockHistogram out;
    out.bins = bins;
    out.flat = block.flat;
    std::vector<double> counts(bins, 0.0);
    for (double v : block.intensity) {
        int b = static_cast<int>(v * bins);
        b = std::clamp(b, 0, bins - 1);
        counts[b] += 1.0;
    }
    // Truncated-window box filter: constant histograms stay constant.
    out.occurrence.assign(bins, 0.0);
    for (int i = 0; i < bins; ++i) {
        const int lo = std::max(0, i - smooth_radius);
        const int hi = std::min(bins - 1, i + smooth_radius);
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) sum += counts[j];
        out.occurrence[i] = sum / (hi - lo + 1);
    }
    const double mx =
        *std::max_element(out.occurrence.begin(), out.occurrence.end());
    if (mx > 0.0)
        for (double& v : out.occurrence) v /= mx;
    return out;
}

BimodalFit find_peaks(const BlockHistogram& hist, double min_prominence,
                      int min_separation) {
    BimodalFit fit;
    if (hist.flat) {
        fit.mode = ThresholdMode::flat;
        return fit;
    }

    std::vector<HistPeak> cands = plateau_maxima(hist.occurrence);
    for (HistPeak& p : cands) {
        p.prominence = topographic_prominence(hist.occurrence, p.bin);
        p.t = hist.bin_center(p.bin);
    }
    std::erase_if(cands, [&](const HistPeak& p) {
        return p.prominence < min_prominence;
    });
    std::stable_sort(cands.begin(), cands.end(),
                     [](const HistPeak& a, const HistPeak& b) {
                         if (a.prominence != b.prominence)
                             return a.prominence > b.prominence;
                         return a.bin < b.bin;
                     });
    std::vector<HistPeak> kept;
    for (const HistPeak& p : cands) {
        const bool clear = std::all_of(
            kept.begin(), kept.end(), [&](const HistPeak& k) {
                return std::abs(k.bin - p.bin) >= min_separation;
            });
        if (clear) kept.push_back(p);
        if (kept.size() == 2) break;
    }

    if (kept.size() >= 2) {
        fit.mode = ThresholdMode::bimodal;
        if (kept[0].t > kept[1].t) std::swap(kept[0], kept[1]);
        fit.peak1 = kept[0];
        fit.peak2 = kept[1];
    } else if (kept.size() == 1) {
        fit.peak1 = kept[0];
        fit.mode = kept[0].t < 0.5 ? ThresholdMode::unimodal_dark
                                   : ThresholdMode::unimodal_light;
    } else {
        // No qualifying peak (only reachable on pathological histograms):
        // fall back to the occurrence-weighted mean location.
        double wsum = 0.0, sum = 0.0;
        for (int i = 0; i < hist.bins; ++i) {
            wsum += hist.occurrence[i] * hist.bin_center(i);
            sum += hist.occurrence[i];
        }
        const double loc = sum > 0.0 ? wsum / sum : 0.5;
        fit.mode = loc < 0.5 ? ThresholdMode::unimodal_dark
                             : ThresholdMode::unimodal_light;
    }
    return fit;
}

BimodalFit correct_threshold(const BimodalFit& fit, double lambda) {
    if (fit.mode != ThresholdMode::bimodal)
        throw std::logic_error("correct_threshold: fit is not bimodal");
    BimodalFit out = fit;
    const double t1 = fit.peak1.t, h1 = fit.peak1.h;
    const double t2 = fit.peak2.t, h2 = fit.peak2.h;
    out.t_o = (t1 + t2) / 2.0;
    const double m = (h2 - h1) / (t2 - t1);
    // Where the perpendicular through the inter-peak midpoint crosses
    // occurrence zero.
    out.t_c = out.t_o + m * (h1 + h2) / 2.0;
    out.t_prime = out.t_o + lambda * (out.t_o - out.t_c);
    const double margin = 0.05 * (t2 - t1);
    out.t_prime = std::clamp(out.t_prime, t1 + margin, t2 - margin);
    return out;
}

Mask binarize_block(const IntensityBlock& block, const BimodalFit& fit) {
    Mask mask(block.rect.w, block.rect.h);
    switch (fit.mode) {
        case ThresholdMode::bimodal:
            for (size_t i = 0; i < block.intensity.size(); ++i)
                mask.data[i] = block.intensity[i] < fit.t_prime ? 1 : 0;
            break;
        case ThresholdMode::unimodal_dark:
            std::fill(mask.data.begin(), mask.data.end(), uint8_t{1});
            break;
        case ThresholdMode::unimodal_light:
        case ThresholdMode::flat:
            break;  // all background
    }
    return mask;
}

}  // namespace nuseg
