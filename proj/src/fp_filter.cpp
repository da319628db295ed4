#include "nuseg/fp_filter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace nuseg {
namespace {

std::array<double, 3> rgb_to_hsv(uint8_t r8, uint8_t g8, uint8_t b8) {
    const double r = r8 / 255.0, g = g8 / 255.0, b = b8 / 255.0;
    const double mx = std::max({r, g, b});
    const double mn = std::min({r, g, b});
    const double d = mx - mn;
    double h = 0.0;
    if (d > 0.0) {
        if (mx == r)
            h = std::fmod((g - b) / d, 6.0);
        else if (mx == g)
            h = (b - r) / d + 2.0;
        else
            h = (r - g) / d + 4.0;
        h /= 6.0;
        if (h < 0.0) h += 1.0;
    }
    const double s = mx > 0.0 ? d / mx : 0.0;
    return {h, s, mx};
}

double value_channel(const RgbImage& rgb, int x, int y) {
    return std::max({rgb.at(x, y, 0), rgb.at(x, y, 1), rgb.at(x, y, 2)}) /
           255.0;
}

}  // namespace

int TileGrid::tile_of(double cx, double cy) const {
    int tx = static_cast<int>(cx / tile_size);
    int ty = static_cast<int>(cy / tile_size);
    tx = std::clamp(tx, 0, tiles_x - 1);
    ty = std::clamp(ty, 0, tiles_y - 1);
    return ty * tiles_x + tx;
}

TileGrid make_tile_grid(int width, int height, int tile_size) {
    if (width <= 0 || height <= 0 || tile_size < 1)
        throw std::invalid_argument("make_tile_grid: bad dimensions");
    TileGrid g;
    g.width = width;
    g.height = height;
    g.tile_size = tile_size;
    g.tiles_x = (width + tile_size - 1) / tile_size;
    g.tiles_y = (height + tile_size - 1) / tile_size;
    return g;
}

InstanceFeatures compute_features(const RgbImage& rgb, const LabelMap& map,
                                  const Instance& ins) {
    InstanceFeatures f;
    for (int64_t p : ins.pixels) {
        const int x = static_cast<int>(p % map.width);
        const int y = static_cast<int>(p / map.width);
        const auto hsv = rgb_to_hsv(rgb.at(x, y, 0), rgb.at(x, y, 1),
                                    rgb.at(x, y, 2));
        f.mean_h += hsv[0];
        f.mean_s += hsv[1];
        f.mean_v += hsv[2];
    }
    const double n = static_cast<double>(ins.pixels.size());
    f.mean_h /= n;
    f.mean_s /= n;
    f.mean_v /= n;

    // V statistics over the instance plus a 2-px outer ring.
    std::unordered_set<int64_t> region(ins.pixels.begin(), ins.pixels.end());
    for (int64_t p : ins.boundary) {
        const int x = static_cast<int>(p % map.width);
        const int y = static_cast<int>(p / map.width);
        for (int dy = -2; dy <= 2; ++dy)
            for (int dx = -2; dx <= 2; ++dx) {
                const int nx = x + dx, ny = y + dy;
                if (map.in_bounds(nx, ny))
                    region.insert(static_cast<int64_t>(ny) * map.width + nx);
            }
    }
    std::vector<int64_t> ordered(region.begin(), region.end());
    std::sort(ordered.begin(), ordered.end());
    double sum = 0.0, sq = 0.0;
    for (int64_t p : ordered) {
        const double v = value_channel(rgb, static_cast<int>(p % map.width),
                                       static_cast<int>(p / map.width));
        sum += v;
        sq += v * v;
    }
    const double m = static_cast<double>(ordered.size());
    const double mean = sum / m;
    const double var = std::max(0.0, sq / m - mean * mean);
    f.contrast = std::clamp(std::sqrt(var) / 0.5, 0.0, 1.0);
    return f;
}

SetAssignment assign_sets(const std::vector<int64_t>& areas,
                          double size_threshold) {
    SetAssignment out;
    for (size_t i = 0; i < areas.size(); ++i) {
        if (static_cast<double>(areas[i]) > size_threshold)
            out.reference.push_back(i);
        else
            out.query.push_back(i);
    }
    return out;
}

InstanceFeatures aggregate_reference(
    const std::vector<InstanceFeatures>& refs) {
    if (refs.empty())
        throw std::logic_error("aggregate_reference: empty reference set");
    InstanceFeatures m;
    for (const InstanceFeatures& f : refs) {
        m.mean_h += f.mean_h;
        m.mean_s += f.mean_s;
        m.mean_v += f.mean_v;
        m.contrast += f.contrast;
    }
    const double n = static_cast<double>(refs.size());
    m.mean_h /= n;
    m.mean_s /= n;
    m.mean_v /= n;
    m.contrast /= n;
    return m;
}

double similarity(const InstanceFeatures& a, const InstanceFeatures& b,
                  double gamma) {
    const double dh = a.mean_h - b.mean_h;
    const double ds = a.mean_s - b.mean_s;
    const double dv = a.mean_v - b.mean_v;
    const double dc = a.contrast - b.contrast;
    return std::exp(-gamma * (dh * dh + ds * ds + dv * dv + dc * dc));
}

FpResult score_and_filter(const LabelMap& map, const RgbImage& rgb,
                          const FpParams& params) {
    FpResult out;
    out.map = map;
    const std::vector<Instance> instances = collect_instances(map);
    if (instances.empty()) return out;

    std::vector<int64_t> areas;
    areas.reserve(instances.size());
    for (const Instance& ins : instances) areas.push_back(ins.area());
    std::vector<int64_t> sorted = areas;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    const double size_threshold =
        n % 2 ? static_cast<double>(sorted[n / 2])
              : (static_cast<double>(sorted[n / 2 - 1]) + sorted[n / 2]) / 2.0;

    const TileGrid grid = make_tile_grid(map.width, map.height,
                                         params.tile_size);
    std::vector<std::vector<size_t>> members(grid.count());
    for (size_t i = 0; i < instances.size(); ++i)
        members[grid.tile_of(instances[i].centroid.x,
                             instances[i].centroid.y)]
            .push_back(i);

    std::vector<InstanceFeatures> features(instances.size());
    std::vector<bool> have_features(instances.size(), false);
    auto feature_of = [&](size_t i) {
        if (!have_features[i]) {
            features[i] = compute_features(rgb, map, instances[i]);
            have_features[i] = true;
        }
        InstanceFeatures f = features[i];
        f.mean_h *= params.feature_scale;
        f.mean_s *= params.feature_scale;
        f.mean_v *= params.feature_scale;
        f.contrast *= params.feature_scale;
        return f;
    };

    for (int t = 0; t < grid.count(); ++t) {
        if (members[t].empty()) continue;
        std::vector<int64_t> tile_areas;
        for (size_t i : members[t]) tile_areas.push_back(areas[i]);
        const SetAssignment sets = assign_sets(tile_areas, size_threshold);
        const bool scored =
            static_cast<int>(sets.reference.size()) >=
            params.min_reference_count;

        std::optional<InstanceFeatures> x_ref;
        if (scored) {
            std::vector<InstanceFeatures> refs;
            for (size_t j : sets.reference)
                refs.push_back(feature_of(members[t][j]));
            x_ref = aggregate_reference(refs);
        }

        for (size_t j = 0; j < members[t].size(); ++j) {
            const size_t i = members[t][j];
            FpDecision d;
            d.tile = t;
            d.id = instances[i].id;
            d.in_reference =
                std::find(sets.reference.begin(), sets.reference.end(), j) !=
                sets.reference.end();
            if (!d.in_reference && scored) {
                d.score = similarity(*x_ref, feature_of(i), params.gamma);
                d.removed = *d.score < params.t_s;
                if (d.removed)
                    for (int64_t p : instances[i].pixels) out.map.data[p] = 0;
            }
            out.decisions.push_back(d);
        }
    }
    return out;
}

}  // namespace nuseg
