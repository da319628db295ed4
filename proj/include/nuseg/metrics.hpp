#pragma once

#include <cstdint>
#include <vector>

#include "nuseg/image.hpp"

namespace nuseg {

/// Aggregated Jaccard Index with its accumulators. aji equals
/// intersection / (union_pixels + unmatched_pred_pixels).
struct AjiBreakdown {
    struct MatchedPair {
        uint32_t gt_id = 0;
        uint32_t pred_id = 0;
        double jaccard = 0.0;
    };
    int64_t intersection = 0;
    int64_t union_pixels = 0;          // matched unions + unmatched GT areas
    int64_t unmatched_pred_pixels = 0;  // never-claimed prediction areas
    std::vector<MatchedPair> matches;
    double aji = 0.0;
    bool empty_pair = false;  // both maps empty; aji defined as 1
};

/// Greedy matching in ascending GT id order: each GT instance claims the
/// not-yet-claimed overlapping prediction with the highest Jaccard (ties to
/// the lower prediction id). Unmatched GT areas enlarge the union;
/// unclaimed prediction areas are added at the end.
AjiBreakdown aji(const LabelMap& gt, const LabelMap& pred);

/// Foreground Dice coefficient, instance ids ignored. Both empty -> 1.
double dice(const LabelMap& gt, const LabelMap& pred);

}  // namespace nuseg
