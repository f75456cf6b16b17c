#include "viewforge/renderer.hpp"

#include "viewforge/certainty_grid.hpp"
#include "viewforge/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace viewforge {

namespace {

constexpr int kTile = 16;
constexpr double kDilation = 0.3;
constexpr double kMinTransmittance = 1e-4;

struct Splat {
    double u, v;           // image-plane mean
    double a, b, c;        // conic (inverse covariance) entries: [a b; b c]
    double depth;
    double opacity;
    Vec3 color;
    int x0, x1, y0, y1;    // inclusive pixel bbox
};

} // namespace

SplatRenderer::SplatRenderer(const GaussianScene& scene, std::size_t max_count) {
    std::vector<std::size_t> keep(scene.size());
    std::iota(keep.begin(), keep.end(), std::size_t{0});
    if (max_count > 0 && max_count < scene.size()) {
        std::vector<double> score(scene.size());
        for (std::size_t i = 0; i < scene.size(); ++i) score[i] = primitive_certainty(scene, i, 1e-8);
        std::partial_sort(keep.begin(), keep.begin() + static_cast<std::ptrdiff_t>(max_count), keep.end(),
                          [&](std::size_t l, std::size_t r) { return score[l] > score[r] || (score[l] == score[r] && l < r); });
        keep.resize(max_count);
        std::sort(keep.begin(), keep.end());
    }
    centers_.reserve(keep.size());
    for (const std::size_t i : keep) {
        const Mat3 rot = scene.rotations[i].normalized().toRotationMatrix();
        const Vec3 s = scene.log_scales[i].array().exp();
        const Mat3 m = rot * s.asDiagonal();
        centers_.push_back(scene.centers[i]);
        covariances_.push_back(m * m.transpose());
        opacities_.push_back(scene.opacities[i]);
        colors_.push_back(scene.dc_colors[i]);
    }
}

RenderOutput SplatRenderer::render(const CameraPose& pose) const {
    const int width = pose.width;
    const int height = pose.height;
    RenderOutput out{Image(width, height, 3), Image(width, height, 1), Image(width, height, 1)};

    const Mat3 w2c = pose.world_to_camera();
    const double lim_x = 1.3 * (0.5 * width / pose.fx);
    const double lim_y = 1.3 * (0.5 * height / pose.fy);

    std::vector<Splat> splats;
    splats.reserve(centers_.size());
    for (std::size_t i = 0; i < centers_.size(); ++i) {
        const Vec3 p = w2c * centers_[i] + pose.translation;
        const double z = p.z();
        if (!(z > pose.near) || !(z < pose.far)) continue;
        // Clamped Jacobian as in the reference rasterizer; keeps grazing
        // primitives from exploding.
        const double tx = std::clamp(p.x() / z, -lim_x, lim_x) * z;
        const double ty = std::clamp(p.y() / z, -lim_y, lim_y) * z;
        Eigen::Matrix<double, 2, 3> jac;
        jac << pose.fx / z, 0.0, -pose.fx * tx / (z * z), 0.0, pose.fy / z, -pose.fy * ty / (z * z);
        const Eigen::Matrix<double, 2, 3> t = jac * w2c;
        Eigen::Matrix2d cov = t * covariances_[i] * t.transpose();
        cov(0, 0) += kDilation;
        cov(1, 1) += kDilation;
        const double det = cov.determinant();
        if (!(det > 0.0)) continue;
        Splat s;
        s.u = pose.fx * p.x() / z + pose.cx;
        s.v = pose.fy * p.y() / z + pose.cy;
        s.a = cov(1, 1) / det;
        s.b = -cov(0, 1) / det;
        s.c = cov(0, 0) / det;
        const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
        const double lambda = mid + std::sqrt(std::max(0.1, mid * mid - det));
        const double radius = std::ceil(3.0 * std::sqrt(lambda));
        s.x0 = std::max(0, static_cast<int>(std::floor(s.u - 0.5 - radius)));
        s.x1 = std::min(width - 1, static_cast<int>(std::ceil(s.u - 0.5 + radius)));
        s.y0 = std::max(0, static_cast<int>(std::floor(s.v - 0.5 - radius)));
        s.y1 = std::min(height - 1, static_cast<int>(std::ceil(s.v - 0.5 + radius)));
        if (s.x0 > s.x1 || s.y0 > s.y1) continue;
        s.depth = z;
        s.opacity = opacities_[i];
        s.color = colors_[i];
        splats.push_back(s);
    }
    // Content-based tie breaks keep the image independent of input order.
    std::sort(splats.begin(), splats.end(), [](const Splat& l, const Splat& r) {
        if (l.depth != r.depth) return l.depth < r.depth;
        if (l.u != r.u) return l.u < r.u;
        if (l.v != r.v) return l.v < r.v;
        if (l.opacity != r.opacity) return l.opacity < r.opacity;
        return std::lexicographical_compare(l.color.data(), l.color.data() + 3, r.color.data(), r.color.data() + 3);
    });

    const int tiles_x = (width + kTile - 1) / kTile;
    const int tiles_y = (height + kTile - 1) / kTile;
    std::vector<std::vector<std::uint32_t>> bins(static_cast<std::size_t>(tiles_x) * tiles_y);
    for (std::size_t k = 0; k < splats.size(); ++k) {
        const Splat& s = splats[k];
        for (int ty = s.y0 / kTile; ty <= s.y1 / kTile; ++ty) {
            for (int tx = s.x0 / kTile; tx <= s.x1 / kTile; ++tx) {
                bins[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(static_cast<std::uint32_t>(k));
            }
        }
    }

    parallel_for_dynamic(0, bins.size(), [&](std::size_t tile) {
        const int tx = static_cast<int>(tile % tiles_x);
        const int ty = static_cast<int>(tile / tiles_x);
        const auto& list = bins[tile];
        for (int y = ty * kTile; y < std::min(height, (ty + 1) * kTile); ++y) {
            for (int x = tx * kTile; x < std::min(width, (tx + 1) * kTile); ++x) {
                const double px = x + 0.5;
                const double py = y + 0.5;
                double transmittance = 1.0;
                Vec3 color = Vec3::Zero();
                double depth = 0.0;
                for (const std::uint32_t k : list) {
                    const Splat& s = splats[k];
                    if (x < s.x0 || x > s.x1 || y < s.y0 || y > s.y1) continue;
                    const double dx = px - s.u;
                    const double dy = py - s.v;
                    const double power = -0.5 * (s.a * dx * dx + 2.0 * s.b * dx * dy + s.c * dy * dy);
                    if (power > 0.0) continue;
                    const double alpha = std::min(1.0, s.opacity * std::exp(power));
                    if (alpha <= 0.0) continue;
                    const double weight = alpha * transmittance;
                    color += weight * s.color;
                    depth += weight * s.depth;
                    transmittance *= 1.0 - alpha;
                    if (transmittance < kMinTransmittance) break;
                }
                const double acc = 1.0 - transmittance;
                for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = std::clamp(color[c], 0.0, 1.0);
                out.alpha.at(x, y) = acc;
                out.depth.at(x, y) = acc > 1e-9 ? depth / acc : 0.0;
            }
        }
    });
    return out;
}

RenderOutput render(const GaussianScene& scene, const CameraPose& pose, std::size_t max_count) {
    return SplatRenderer(scene, max_count).render(pose);
}

} // namespace viewforge
