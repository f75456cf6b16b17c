#pragma once

#include "viewforge/image.hpp"
#include "viewforge/scene.hpp"

#include <cstddef>
#include <vector>

namespace viewforge {

struct RenderOutput {
    Image color;  ///< RGB in [0,1], black background
    Image depth;  ///< alpha-weighted mean camera-space z, 0 where nothing was hit
    Image alpha;  ///< accumulated opacity 1 - T
};

/// Forward 3DGS rasterizer on the CPU: EWA projection of each primitive to a
/// 2D Gaussian (plus 0.3 px^2 dilation), depth sort, front-to-back alpha
/// compositing per 16x16 tile until transmittance drops below 1e-4.
/// Pixel (x, y) samples the continuous image point (x + 0.5, y + 0.5).
class SplatRenderer {
public:
    /// Keeps at most `max_count` primitives, highest opacity/volume first;
    /// 0 keeps everything.
    explicit SplatRenderer(const GaussianScene& scene, std::size_t max_count = 0);

    /// Renders at the pose's own image size.
    RenderOutput render(const CameraPose& pose) const;

    std::size_t primitive_count() const noexcept { return centers_.size(); }

private:
    std::vector<Vec3> centers_;
    std::vector<Mat3> covariances_;
    std::vector<double> opacities_;
    std::vector<Vec3> colors_;
};

RenderOutput render(const GaussianScene& scene, const CameraPose& pose, std::size_t max_count = 0);

} // namespace viewforge
