#include "nuseg/blockgrid.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nuseg {

BlockRect BlockGrid::block(int index) const {
    const int by = index / blocks_x;
    const int bx = index % blocks_x;
    BlockRect r;
    r.x0 = bx * block_size;
    r.y0 = by * block_size;
    r.w = std::min(block_size, width - r.x0);
    r.h = std::min(block_size, height - r.y0);
    return r;
}

BlockGrid decompose(int width, int height, int block_size) {
    if (width <= 0 || height <= 0)
        throw std::invalid_argument("decompose: empty image");
    if (block_size < 1) throw std::invalid_argument("decompose: block_size");
    BlockGrid g;
    g.width = width;
    g.height = height;
    g.block_size = block_size;
    g.blocks_x = (width + block_size - 1) / block_size;
    g.blocks_y = (height + block_size - 1) / block_size;
    return g;
}

IntensityBlock block_pca_intensity(const RgbImage& img, const GrayF& l_ref,
                                   const BlockRect& rect) {
    IntensityBlock out;
    out.rect = rect;
    const int n = rect.pixel_count();
    out.intensity.assign(n, 0.5);

    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (int y = rect.y0; y < rect.y0 + rect.h; ++y)
        for (int x = rect.x0; x < rect.x0 + rect.w; ++x)
            mean += Eigen::Vector3d(img.at(x, y, 0), img.at(x, y, 1),
                                    img.at(x, y, 2));
    mean /= n;

    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (int y = rect.y0; y < rect.y0 + rect.h; ++y)
        for (int x = rect.x0; x < rect.x0 + rect.w; ++x) {
            const Eigen::Vector3d d =
                Eigen::Vector3d(img.at(x, y, 0), img.at(x, y, 1),
                                img.at(x, y, 2)) -
                mean;
            cov += d * d.transpose();
        }
    cov /= n;

    if (cov.trace() < 1e-12) {
        out.flat = true;
        return out;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Eigen::Vector3d v = es.eigenvectors().col(2);  // largest eigenvalue last

    std::vector<double> proj(n);
    double proj_mean = 0.0, l_mean = 0.0;
    {
        int i = 0;
        for (int y = rect.y0; y < rect.y0 + rect.h; ++y)
            for (int x = rect.x0; x < rect.x0 + rect.w; ++x, ++i) {
                const Eigen::Vector3d d =
                    Eigen::Vector3d(img.at(x, y, 0), img.at(x, y, 1),
                                    img.at(x, y, 2)) -
                    mean;
                proj[i] = v.dot(d);
                proj_mean += proj[i];
                l_mean += l_ref.at(x, y);
            }
    }
    proj_mean /= n;
    l_mean /= n;

    // Sign of the Pearson correlation equals the sign of the cross-covariance
    // (denominator is positive whenever both series vary).
    double cross = 0.0;
    {
        int i = 0;
        for (int y = rect.y0; y < rect.y0 + rect.h; ++y)
            for (int x = rect.x0; x < rect.x0 + rect.w; ++x, ++i)
                cross += (proj[i] - proj_mean) * (l_ref.at(x, y) - l_mean);
    }

    bool flip;
    if (cross < 0.0) {
        flip = true;
    } else if (cross > 0.0) {
        flip = false;
    } else {
        // Tie: orient so the largest-magnitude component is positive.
        int k = 0;
        for (int c = 1; c < 3; ++c)
            if (std::abs(v[c]) > std::abs(v[k])) k = c;
        flip = v[k] < 0.0;
    }
    if (flip) {
        v = -v;
        for (double& p : proj) p = -p;
    }
    out.eigenvector = {v[0], v[1], v[2]};
    out.sign_flipped = flip;

    const auto [mn_it, mx_it] = std::minmax_element(proj.begin(), proj.end());
    const double mn = *mn_it, range = *mx_it - *mn_it;
    if (range < 1e-9) {
        out.flat = true;
        std::fill(out.intensity.begin(), out.intensity.end(), 0.5);
        return out;
    }
    for (int i = 0; i < n; ++i) out.intensity[i] = (proj[i] - mn) / range;
    return out;
}

}  // namespace nuseg
