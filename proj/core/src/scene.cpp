#include "viewforge/scene.hpp"

#include "viewforge/error.hpp"

#include <cmath>
#include <string>

namespace viewforge {

void GaussianScene::reserve(std::size_t n) {
    centers.reserve(n);
    log_scales.reserve(n);
    rotations.reserve(n);
    opacities.reserve(n);
    dc_colors.reserve(n);
}

void GaussianScene::push_back(const Vec3& center, const Vec3& log_scale, const Quat& rotation,
                              double opacity, const Vec3& color) {
    centers.push_back(center);
    log_scales.push_back(log_scale);
    rotations.push_back(rotation);
    opacities.push_back(opacity);
    dc_colors.push_back(color);
}

double GaussianScene::volume(std::size_t i) const {
    const Vec3& s = log_scales[i];
    return std::exp(s.x()) * std::exp(s.y()) * std::exp(s.z());
}

void GaussianScene::validate() const {
    const std::size_t n = centers.size();
    if (log_scales.size() != n || rotations.size() != n || opacities.size() != n ||
        dc_colors.size() != n) {
        throw Error(ErrorCode::MalformedFile, "gaussian attribute arrays differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!centers[i].allFinite() || !log_scales[i].allFinite() || !dc_colors[i].allFinite() ||
            !rotations[i].coeffs().allFinite() || !std::isfinite(opacities[i])) {
            throw Error(ErrorCode::MalformedFile, "non-finite value in primitive " + std::to_string(i));
        }
        if (std::abs(rotations[i].norm() - 1.0) > 1e-4) {
            throw Error(ErrorCode::MalformedFile, "non-unit quaternion in primitive " + std::to_string(i));
        }
        if (opacities[i] < 0.0 || opacities[i] > 1.0) {
            throw Error(ErrorCode::MalformedFile, "opacity outside [0,1] in primitive " + std::to_string(i));
        }
    }
}

std::string_view to_string(PoseKind kind) {
    return kind == PoseKind::training ? "training" : "candidate";
}

PoseKind pose_kind_from_string(std::string_view s) {
    if (s == "training") return PoseKind::training;
    if (s == "candidate") return PoseKind::candidate;
    throw Error(ErrorCode::MalformedFile, "unknown pose kind '" + std::string(s) + "'");
}

Vec3 CameraPose::center() const { return -(rotation.conjugate() * translation); }

Vec3 CameraPose::right() const { return rotation.conjugate() * Vec3::UnitX(); }
Vec3 CameraPose::down() const { return rotation.conjugate() * Vec3::UnitY(); }
Vec3 CameraPose::forward() const { return rotation.conjugate() * Vec3::UnitZ(); }

void CameraPose::set_center(const Vec3& c) { translation = -(rotation * c); }

CameraPose CameraPose::resized(int new_width, int new_height) const {
    CameraPose out = *this;
    const double sx = static_cast<double>(new_width) / width;
    const double sy = static_cast<double>(new_height) / height;
    out.fx = fx * sx;
    out.fy = fy * sy;
    out.cx = cx * sx;
    out.cy = cy * sy;
    out.width = new_width;
    out.height = new_height;
    return out;
}

void CameraPose::validate() const {
    if (!rotation.coeffs().allFinite() || !translation.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "camera " + std::to_string(id) + " has non-finite pose");
    }
    if (std::abs(rotation.norm() - 1.0) > 1e-6) {
        throw Error(ErrorCode::InvalidArgument, "camera " + std::to_string(id) + " rotation not unit");
    }
    if (!(near > 0.0) || !(far > near)) {
        throw Error(ErrorCode::InvalidArgument, "camera " + std::to_string(id) + " has invalid near/far");
    }
    if (width <= 0 || height <= 0 || !(fx > 0.0) || !(fy > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "camera " + std::to_string(id) + " has invalid intrinsics");
    }
}

double SceneBounds::volume() const {
    const Vec3 e = extent();
    return e.x() * e.y() * e.z();
}

bool SceneBounds::contains(const Vec3& p) const {
    return (p.array() >= min_corner.array()).all() && (p.array() <= max_corner.array()).all();
}

bool SceneBounds::valid() const {
    return min_corner.allFinite() && max_corner.allFinite() &&
           (min_corner.array() < max_corner.array()).all();
}

Quat look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& world_up) {
    Vec3 z = target - eye;
    const double dist = z.norm();
    if (!(dist > 1e-12)) {
        throw Error(ErrorCode::DegenerateLookAt, "look-at target coincides with camera position");
    }
    z /= dist;
    Vec3 up = world_up.normalized();
    Vec3 x = z.cross(up);
    if (x.norm() < 1e-9) {
        // Looking straight along the up axis: borrow any perpendicular.
        const Vec3 alt = std::abs(up.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
        x = z.cross(alt);
    }
    x.normalize();
    const Vec3 y = z.cross(x);
    Mat3 c2w;
    c2w.col(0) = x;
    c2w.col(1) = y;
    c2w.col(2) = z;
    Quat q(c2w.transpose());
    q.normalize();
    return q;
}

double rotation_angle(const Quat& a, const Quat& b) {
    const Quat rel = a.normalized().conjugate() * b.normalized();
    return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

} // namespace viewforge
