#include "nuseg/metrics.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace nuseg {

AjiBreakdown aji(const LabelMap& gt, const LabelMap& pred) {
    if (gt.width != pred.width || gt.height != pred.height)
        throw std::invalid_argument("aji: dimension mismatch");

    std::map<uint32_t, int64_t> gt_area, pred_area;
    // Ordered keys give deterministic candidate enumeration.
    std::map<uint32_t, std::map<uint32_t, int64_t>> overlap;
    for (size_t i = 0; i < gt.data.size(); ++i) {
        const uint32_t g = gt.data[i], p = pred.data[i];
        if (g) ++gt_area[g];
        if (p) ++pred_area[p];
        if (g && p) ++overlap[g][p];
    }

    AjiBreakdown out;
    if (gt_area.empty() && pred_area.empty()) {
        out.empty_pair = true;
        out.aji = 1.0;
        return out;
    }

    std::map<uint32_t, bool> claimed;
    for (const auto& [p, a] : pred_area) claimed[p] = false;

    for (const auto& [g, ga] : gt_area) {
        const auto it = overlap.find(g);
        int64_t best_inter = 0, best_union = 1;
        uint32_t best_p = 0;
        bool found = false;
        if (it != overlap.end()) {
            for (const auto& [p, inter] : it->second) {
                if (claimed[p]) continue;
                const int64_t uni = ga + pred_area[p] - inter;
                // ascending p order makes "first strictly better" = lower id
                // on ties
                if (!found ||
                    inter * best_union > best_inter * uni) {
                    best_inter = inter;
                    best_union = uni;
                    best_p = p;
                    found = true;
                }
            }
        }
        if (found) {
            claimed[best_p] = true;
            out.intersection += best_inter;
            out.union_pixels += best_union;
            out.matches.push_back(
                {g, best_p,
                 static_cast<double>(best_inter) / best_union});
        } else {
            out.union_pixels += ga;
        }
    }
    for (const auto& [p, used] : claimed)
        if (!used) out.unmatched_pred_pixels += pred_area[p];

    const int64_t denom = out.union_pixels + out.unmatched_pred_pixels;
    out.aji = denom > 0 ? static_cast<double>(out.intersection) / denom : 0.0;
    return out;
}

double dice(const LabelMap& gt, const LabelMap& pred) {
    if (gt.width != pred.width || gt.height != pred.height)
        throw std::invalid_argument("dice: dimension mismatch");
    int64_t a = 0, b = 0, inter = 0;
    for (size_t i = 0; i < gt.data.size(); ++i) {
        const bool fg = gt.data[i] != 0, fp = pred.data[i] != 0;
        a += fg;
        b += fp;
        inter += fg && fp;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

}  // namespace nuseg
