#include "nuseg/instancemorph.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>
#include <utility>

namespace nuseg {
namespace {

constexpr std::array<std::array<int, 2>, 4> kNeigh4{
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
constexpr std::array<std::array<int, 2>, 8> kNeigh8{{{1, 0},
                                                     {-1, 0},
                                                     {0, 1},
                                                     {0, -1},
                                                     {1, 1},
                                                     {1, -1},
                                                     {-1, 1},
                                                     {-1, -1}}};

uint32_t max_label(const LabelMap& map) {
    uint32_t mx = 0;
    for (uint32_t v : map.data) mx = std::max(mx, v);
    return mx;
}

std::vector<int64_t> areas_by_id(const LabelMap& map) {
    std::vector<int64_t> areas(static_cast<size_t>(max_label(map)) + 1, 0);
    for (uint32_t v : map.data) ++areas[v];
    areas[0] = 0;
    return areas;
}

struct ShapeInfo {
    std::vector<int64_t> boundary;
    std::vector<Vec2> corner_hull;
    double hull_area = 0.0;
    double solidity = 1.0;
};

ShapeInfo analyze_shape(const LabelMap& map, uint32_t id,
                        const std::vector<int64_t>& pixels) {
    ShapeInfo s;
    for (int64_t p : pixels) {
        const int x = static_cast<int>(p % map.width);
        const int y = static_cast<int>(p / map.width);
        for (auto [dx, dy] : kNeigh4) {
            const int nx = x + dx, ny = y + dy;
            if (!map.in_bounds(nx, ny) || map.at(nx, ny) != id) {
                s.boundary.push_back(p);
                break;
            }
        }
    }
    std::vector<Vec2> corners;
    corners.reserve(s.boundary.size() * 4);
    for (int64_t p : s.boundary) {
        const double x = static_cast<double>(p % map.width);
        const double y = static_cast<double>(p / map.width);
        corners.push_back({x, y});
        corners.push_back({x + 1, y});
        corners.push_back({x, y + 1});
        corners.push_back({x + 1, y + 1});
    }
    s.corner_hull = convex_hull(std::move(corners));
    if (s.corner_hull.size() >= 3)
        s.hull_area = std::abs(polygon_area(s.corner_hull));
    s.solidity = s.hull_area > 0.0
                     ? static_cast<double>(pixels.size()) / s.hull_area
                     : 1.0;
    return s;
}

/// 8-connected components of the pixels in `candidates` still labeled `id`,
/// discovered in ascending-pixel order; each piece comes back sorted.
std::vector<std::vector<int64_t>> relabel_subset(
    const LabelMap& map, uint32_t id, const std::vector<int64_t>& candidates) {
    std::vector<std::vector<int64_t>> pieces;
    if (candidates.empty()) return pieces;
    int x0 = map.width, y0 = map.height, x1 = -1, y1 = -1;
    for (int64_t p : candidates) {
        const int x = static_cast<int>(p % map.width);
        const int y = static_cast<int>(p / map.width);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }
    const int bw = x1 - x0 + 1, bh = y1 - y0 + 1;
    Mask visited(bw, bh, 0);
    std::vector<int64_t> stack;
    for (int64_t seed : candidates) {
        if (map.data[seed] != id) continue;
        const int sx = static_cast<int>(seed % map.width) - x0;
        const int sy = static_cast<int>(seed / map.width) - y0;
        if (visited.at(sx, sy)) continue;
        visited.at(sx, sy) = 1;
        stack.assign(1, seed);
        std::vector<int64_t> piece;
        while (!stack.empty()) {
            const int64_t p = stack.back();
            stack.pop_back();
            piece.push_back(p);
            const int x = static_cast<int>(p % map.width);
            const int y = static_cast<int>(p / map.width);
            for (auto [dx, dy] : kNeigh8) {
                const int nx = x + dx, ny = y + dy;
                if (nx < x0 || ny < y0 || nx > x1 || ny > y1) continue;
                if (visited.at(nx - x0, ny - y0)) continue;
                if (map.at(nx, ny) != id) continue;
                visited.at(nx - x0, ny - y0) = 1;
                stack.push_back(static_cast<int64_t>(ny) * map.width + nx);
            }
        }
        std::sort(piece.begin(), piece.end());
        pieces.push_back(std::move(piece));
    }
    return pieces;
}

/// Cut pixels: the 4-connected line through both defect points, extended
/// past each end while it stays inside the instance.
std::vector<std::pair<int, int>> cut_line(const LabelMap& map, uint32_t id,
                                          int x1, int y1, int x2, int y2) {
    const int dx = x2 - x1, dy = y2 - y1;
    const int span = std::max(std::abs(dx), std::abs(dy));
    const int K = (map.width + map.height) / std::max(1, span) + 2;
    auto full = line_pixels_4connected(x1 - K * dx, y1 - K * dy, x2 + K * dx,
                                       y2 + K * dy);
    auto find = [&](int x, int y) -> ptrdiff_t {
        for (size_t i = 0; i < full.size(); ++i)
            if (full[i].first == x && full[i].second == y)
                return static_cast<ptrdiff_t>(i);
        return -1;
    };
    ptrdiff_t lo = find(x1, y1), hi = find(x2, y2);
    if (lo < 0 || hi < 0) return line_pixels_4connected(x1, y1, x2, y2);
    if (lo > hi) std::swap(lo, hi);
    auto inside = [&](ptrdiff_t i) {
        const auto [x, y] = full[i];
        return map.in_bounds(x, y) && map.at(x, y) == id;
    };
    while (lo > 0 && inside(lo - 1)) --lo;
    while (hi + 1 < static_cast<ptrdiff_t>(full.size()) && inside(hi + 1))
        ++hi;
    return {full.begin() + lo, full.begin() + hi + 1};
}

struct WorkItem {
    uint32_t id = 0;
    int depth = 0;
    std::vector<int64_t> pixels;
};

/// Attempt one convexity split. On success the map is updated and the
/// resulting pieces are returned for recursion; an empty result means the
/// instance was left intact.
std::vector<WorkItem> try_split(LabelMap& map, WorkItem& item,
                                const SplitParams& params,
                                uint32_t& next_id) {
    std::vector<WorkItem> children;
    const ShapeInfo shape = analyze_shape(map, item.id, item.pixels);
    if (shape.solidity >= params.solidity_split) return children;

    std::vector<Vec2> centers;
    centers.reserve(shape.boundary.size());
    for (int64_t p : shape.boundary)
        centers.push_back({static_cast<double>(p % map.width),
                           static_cast<double>(p / map.width)});
    const std::vector<Vec2> hull = convex_hull(centers);
    if (hull.size() < 3) return children;  // collinear boundary

    // Deepest boundary point under each hull edge.
    struct Defect {
        double depth = 0.0;
        int64_t pixel = -1;
    };
    std::vector<Defect> by_edge(hull.size());
    for (size_t b = 0; b < shape.boundary.size(); ++b) {
        const Vec2& c = centers[b];
        double best = std::numeric_limits<double>::max();
        size_t best_edge = 0;
        for (size_t e = 0; e < hull.size(); ++e) {
            const double d = point_segment_distance(
                c, hull[e], hull[(e + 1) % hull.size()]);
            if (d < best) {
                best = d;
                best_edge = e;
            }
        }
        Defect& slot = by_edge[best_edge];
        const int64_t p = shape.boundary[b];
        if (best > slot.depth || (best == slot.depth && slot.pixel >= 0 &&
                                  p < slot.pixel)) {
            slot.depth = best;
            slot.pixel = p;
        }
    }
    std::vector<Defect> defects;
    for (const Defect& d : by_edge)
        if (d.pixel >= 0 && d.depth > 1e-9) defects.push_back(d);
    if (defects.size() < 2) return children;
    std::sort(defects.begin(), defects.end(), [](const Defect& a,
                                                 const Defect& b) {
        if (a.depth != b.depth) return a.depth > b.depth;
        return a.pixel < b.pixel;
    });
    const double eq_diam = std::sqrt(
        4.0 * static_cast<double>(item.pixels.size()) / std::numbers::pi);
    if (defects[1].depth < params.defect_depth_fraction * eq_diam)
        return children;
    if (defects[0].pixel == defects[1].pixel) return children;

    const int ax = static_cast<int>(defects[0].pixel % map.width);
    const int ay = static_cast<int>(defects[0].pixel / map.width);
    const int bx = static_cast<int>(defects[1].pixel % map.width);
    const int by = static_cast<int>(defects[1].pixel / map.width);
    std::vector<int64_t> cleared;
    for (const auto& [cx, cy] : cut_line(map, item.id, ax, ay, bx, by)) {
        if (!map.in_bounds(cx, cy)) continue;
        uint32_t& v = map.at(cx, cy);
        if (v == item.id) {
            v = 0;
            cleared.push_back(static_cast<int64_t>(cy) * map.width + cx);
        }
    }

    auto pieces = relabel_subset(map, item.id, item.pixels);
    if (pieces.size() < 2) {  // cut failed to disconnect; revert
        for (int64_t p : cleared) map.data[p] = item.id;
        return children;
    }
    size_t keep = 0;
    for (size_t i = 1; i < pieces.size(); ++i)
        if (pieces[i].size() > pieces[keep].size()) keep = i;
    children.push_back({item.id, item.depth + 1, std::move(pieces[keep])});
    for (size_t i = 0; i < pieces.size(); ++i) {
        if (i == keep) continue;
        const uint32_t nid = next_id++;
        for (int64_t p : pieces[i]) map.data[p] = nid;
        children.push_back({nid, item.depth + 1, std::move(pieces[i])});
    }
    return children;
}

}  // namespace

std::vector<Instance> collect_instances(const LabelMap& map) {
    const uint32_t mx = max_label(map);
    std::vector<std::vector<int64_t>> pixels(static_cast<size_t>(mx) + 1);
    for (int64_t i = 0; i < static_cast<int64_t>(map.data.size()); ++i)
        if (map.data[i]) pixels[map.data[i]].push_back(i);
    std::vector<Instance> out;
    for (uint32_t id = 1; id <= mx; ++id) {
        if (pixels[id].empty()) continue;
        Instance ins;
        ins.id = id;
        ins.pixels = std::move(pixels[id]);
        double sx = 0.0, sy = 0.0;
        for (int64_t p : ins.pixels) {
            sx += static_cast<double>(p % map.width);
            sy += static_cast<double>(p / map.width);
        }
        ins.centroid = {sx / ins.pixels.size(), sy / ins.pixels.size()};
        ShapeInfo s = analyze_shape(map, id, ins.pixels);
        ins.boundary = std::move(s.boundary);
        ins.hull = std::move(s.corner_hull);
        ins.hull_area = s.hull_area;
        ins.solidity = s.solidity;
        out.push_back(std::move(ins));
    }
    return out;
}

SizePrior compute_size_prior(const LabelMap& map, double area_floor,
                             double area_fraction) {
    SizePrior prior;
    for (int64_t a : areas_by_id(map))
        if (a > 0) prior.areas.push_back(a);
    if (prior.areas.empty()) {
        prior.min_area = area_floor;
        return prior;
    }
    std::vector<int64_t> sorted = prior.areas;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    prior.median_area =
        n % 2 ? static_cast<double>(sorted[n / 2])
              : (static_cast<double>(sorted[n / 2 - 1]) + sorted[n / 2]) / 2.0;
    prior.min_area = std::max(area_floor, area_fraction * prior.median_area);
    return prior;
}

LabelMap label_components(const Mask& mask) {
    LabelMap out(mask.width, mask.height, 0);
    uint32_t next = 0;
    std::vector<int64_t> stack;
    for (int64_t i = 0; i < static_cast<int64_t>(mask.data.size()); ++i) {
        if (!mask.data[i] || out.data[i]) continue;
        out.data[i] = ++next;
        stack.assign(1, i);
        while (!stack.empty()) {
            const int64_t p = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(p % mask.width);
            const int y = static_cast<int>(p / mask.width);
            for (auto [dx, dy] : kNeigh8) {
                const int nx = x + dx, ny = y + dy;
                if (!mask.in_bounds(nx, ny)) continue;
                const int64_t q = static_cast<int64_t>(ny) * mask.width + nx;
                if (mask.data[q] && !out.data[q]) {
                    out.data[q] = next;
                    stack.push_back(q);
                }
            }
        }
    }
    return out;
}

LabelMap remove_small(const LabelMap& map, const SizePrior& prior) {
    const auto areas = areas_by_id(map);
    std::vector<uint32_t> remap(areas.size(), 0);
    uint32_t next = 0;
    for (size_t id = 1; id < areas.size(); ++id)
        if (areas[id] > 0 && static_cast<double>(areas[id]) >= prior.min_area)
            remap[id] = ++next;
    LabelMap out(map.width, map.height, 0);
    for (size_t i = 0; i < map.data.size(); ++i)
        out.data[i] = remap[map.data[i]];
    return out;
}

LabelMap fill_holes(const LabelMap& map) {
    LabelMap out = map;
    Plane<int32_t> comp(map.width, map.height, 0);
    int32_t ncomp = 0;
    std::vector<int64_t> stack, members;
    for (int64_t i = 0; i < static_cast<int64_t>(map.data.size()); ++i) {
        if (map.data[i] != 0 || comp.data[i]) continue;
        ++ncomp;
        bool border = false;
        bool ambiguous = false;
        uint32_t rim = 0;
        members.clear();
        comp.data[i] = ncomp;
        stack.assign(1, i);
        while (!stack.empty()) {
            const int64_t p = stack.back();
            stack.pop_back();
            members.push_back(p);
            const int x = static_cast<int>(p % map.width);
            const int y = static_cast<int>(p / map.width);
            if (x == 0 || y == 0 || x == map.width - 1 ||
                y == map.height - 1)
                border = true;
            for (auto [dx, dy] : kNeigh8) {
                const int nx = x + dx, ny = y + dy;
                if (!map.in_bounds(nx, ny)) continue;
                const uint32_t v = map.at(nx, ny);
                if (v != 0) {
                    if (rim == 0)
                        rim = v;
                    else if (rim != v)
                        ambiguous = true;
                }
            }
            for (auto [dx, dy] : kNeigh4) {
                const int nx = x + dx, ny = y + dy;
                if (!map.in_bounds(nx, ny)) continue;
                const int64_t q = static_cast<int64_t>(ny) * map.width + nx;
                if (map.data[q] == 0 && !comp.data[q]) {
                    comp.data[q] = ncomp;
                    stack.push_back(q);
                }
            }
        }
        if (!border && !ambiguous && rim != 0)
            for (int64_t p : members) out.data[p] = rim;
    }
    return out;
}

LabelMap split_convexity(const LabelMap& map, const SplitParams& params) {
    LabelMap out = map;
    uint32_t next_id = max_label(out) + 1;
    std::vector<WorkItem> work;
    for (Instance& ins : collect_instances(out))
        work.push_back({ins.id, 0, std::move(ins.pixels)});
    for (size_t w = 0; w < work.size(); ++w) {
        if (work[w].depth >= params.max_depth) continue;
        for (WorkItem& child : try_split(out, work[w], params, next_id))
            work.push_back(std::move(child));
    }
    return out;
}

LabelMap refine_shapes(const LabelMap& map, const RefineParams& params) {
    LabelMap out = map;
    uint32_t next_id = max_label(out) + 1;
    for (const Instance& ins : collect_instances(map)) {
        std::vector<int64_t> eroded;
        for (int64_t p : ins.pixels) {
            const int x = static_cast<int>(p % map.width);
            const int y = static_cast<int>(p / map.width);
            bool keep = true;
            for (auto [dx, dy] : kNeigh4) {
                const int nx = x + dx, ny = y + dy;
                if (!map.in_bounds(nx, ny) || map.at(nx, ny) != ins.id) {
                    keep = false;
                    break;
                }
            }
            if (keep) eroded.push_back(p);
        }
        std::unordered_set<int64_t> core(eroded.begin(), eroded.end());
        std::vector<int64_t> opened;
        for (int64_t p : ins.pixels) {
            bool keep = core.count(p) > 0;
            if (!keep) {
                const int x = static_cast<int>(p % map.width);
                const int y = static_cast<int>(p / map.width);
                for (auto [dx, dy] : kNeigh4) {
                    const int nx = x + dx, ny = y + dy;
                    if (map.in_bounds(nx, ny) &&
                        core.count(static_cast<int64_t>(ny) * map.width +
                                   nx) > 0) {
                        keep = true;
                        break;
                    }
                }
            }
            if (keep)
                opened.push_back(p);
            else
                out.data[p] = 0;
        }
        if (opened.empty()) continue;
        auto pieces = relabel_subset(out, ins.id, opened);
        if (pieces.size() < 2) continue;
        size_t keep = 0;
        for (size_t i = 1; i < pieces.size(); ++i)
            if (pieces[i].size() > pieces[keep].size()) keep = i;
        for (size_t i = 0; i < pieces.size(); ++i) {
            if (i == keep) continue;
            const uint32_t nid = next_id++;
            for (int64_t p : pieces[i]) out.data[p] = nid;
        }
    }
    out = fill_holes(out);
    out = split_convexity(out, params.split);
    out = remove_small(
        out, compute_size_prior(out, params.area_floor, params.area_fraction));
    for (const Instance& ins : collect_instances(out)) {
        if (ins.solidity >= params.solidity_hull_replace) continue;
        if (ins.hull.size() < 3) continue;
        fill_polygon(ins.hull, out.width, out.height, [&](int x, int y) {
            uint32_t& v = out.at(x, y);
            if (v == 0) v = ins.id;
        });
    }
    return out;
}

}  // namespace nuseg
