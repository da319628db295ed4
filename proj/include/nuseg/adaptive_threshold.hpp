#pragma once

#include <vector>

#include "nuseg/blockgrid.hpp"
#include "nuseg/image.hpp"

namespace nuseg {

/// Histogram of a block's [0,1] intensities: box-smoothed counts divided by
/// the maximum smoothed count, so occurrences live in [0,1] with peak 1.
struct BlockHistogram {
    int bins = 64;
    std::vector<double> occurrence;  // normalized smoothed counts, size bins
    bool flat = false;               // propagated from a flat block

    double bin_center(int bin) const { return (bin + 0.5) / bins; }
};

struct HistPeak {
    int bin = 0;
    double t = 0.0;  // intensity at the bin center
    double h = 0.0;  // normalized occurrence
    double prominence = 0.0;
};

enum class ThresholdMode { bimodal, unimodal_dark, unimodal_light, flat };

/// Bimodal model of one block histogram plus the corrected threshold.
/// peak1/peak2 ordered by intensity (t1 < t2); the threshold fields are
/// meaningful only in bimodal mode.
struct BimodalFit {
    ThresholdMode mode = ThresholdMode::flat;
    HistPeak peak1;
    HistPeak peak2;
    double t_o = 0.0;      // mid-peak threshold (t1+t2)/2
    double t_c = 0.0;      // perpendicular-intercept reference
    double t_prime = 0.0;  // corrected threshold
};

BlockHistogram build_histogram(const IntensityBlock& block, int bins,
                               int smooth_radius);

/// Detect peaks by topographic prominence (height above the higher of the two
/// flanking minima; the global maximum has prominence equal to its height).
/// Peaks closer than min_separation bins to a more prominent kept peak are
/// suppressed. The two most prominent survivors define a bimodal fit; a lone
/// survivor selects the unimodal mode by its location relative to 0.5.
BimodalFit find_peaks(const BlockHistogram& hist, double min_prominence,
                      int min_separation);

/// Complete a bimodal fit: the mid-peak threshold is pushed away from the
/// higher peak by lambda times the distance to the perpendicular intercept,
/// then clamped to the inner 90% of the inter-peak interval.
BimodalFit correct_threshold(const BimodalFit& fit, double lambda);

/// Foreground = intensity strictly below the corrected threshold (nuclei are
/// dark). Unimodal-dark blocks are all foreground, unimodal-light and flat
/// blocks all background. The mask is block-local (rect dimensions).
Mask binarize_block(const IntensityBlock& block, const BimodalFit& fit);

}  // namespace nuseg
