#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace nuseg {

struct Vec2 {
    double x = 0;
    double y = 0;

    bool operator==(const Vec2&) const = default;
};

inline double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

/// Signed polygon area (shoelace). Positive for counter-clockwise vertex order.
double polygon_area(const std::vector<Vec2>& poly);

/// Convex hull by monotone chain, counter-clockwise, no duplicate endpoint.
/// Collinear input collapses to fewer than 3 vertices.
std::vector<Vec2> convex_hull(std::vector<Vec2> points);

/// Euclidean distance from p to the closed segment [a, b].
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

/// Distance from an interior point to the boundary of a convex polygon.
double distance_to_polygon_boundary(const Vec2& p, const std::vector<Vec2>& poly);

/// 4-connected digital line from (x0,y0) to (x1,y1), endpoints included.
/// Each step moves along exactly one axis, so the line blocks 8-connected paths.
std::vector<std::pair<int, int>> line_pixels_4connected(int x0, int y0, int x1, int y1);

/// Scanline even-odd polygon fill sampled at pixel centers (x+0.5, y+0.5).
/// Calls emit(x, y) for every covered pixel inside the clip rectangle
/// [0,width) x [0,height), row by row, left to right.
template <typename Emit>
void fill_polygon(const std::vector<Vec2>& poly, int width, int height, Emit&& emit) {
    if (poly.size() < 3) return;

    double ymin = poly[0].y, ymax = poly[0].y;
    for (const auto& v : poly) {
        ymin = std::min(ymin, v.y);
        ymax = std::max(ymax, v.y);
    }
    int y0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
    int y1 = std::min(height - 1, static_cast<int>(std::ceil(ymax)));

    std::vector<double> xs;
    for (int y = y0; y <= y1; ++y) {
        const double sy = y + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const Vec2& a = poly[i];
            const Vec2& b = poly[(i + 1) % poly.size()];
            // Half-open span rule keeps vertices on a scanline from double-counting.
            if ((a.y <= sy && sy < b.y) || (b.y <= sy && sy < a.y)) {
                xs.push_back(a.x + (sy - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            // Pixel center x+0.5 lies in [xs[i], xs[i+1]).
            int xa = static_cast<int>(std::ceil(xs[i] - 0.5));
            int xb = static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1;
            xa = std::max(xa, 0);
            xb = std::min(xb, width - 1);
            for (int x = xa; x <= xb; ++x) emit(x, y);
        }
    }
}

}  // namespace nuseg
