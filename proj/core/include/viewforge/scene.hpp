#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace viewforge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Gaussian primitives stored as parallel arrays. Opacities are activated
/// (in [0,1]); scales stay in log space as they are on disk.
struct GaussianScene {
    std::vector<Vec3> centers;
    std::vector<Vec3> log_scales;
    std::vector<Quat> rotations;
    std::vector<double> opacities;
    std::vector<Vec3> dc_colors;

    std::size_t size() const noexcept { return centers.size(); }
    bool empty() const noexcept { return centers.empty(); }

    void reserve(std::size_t n);
    void push_back(const Vec3& center, const Vec3& log_scale, const Quat& rotation, double opacity,
                   const Vec3& color);

    /// Product of the three axis lengths.
    double volume(std::size_t i) const;

    /// Throws MalformedFile if any invariant (unit quaternions, opacity range,
    /// finiteness, equal array lengths) is violated.
    void validate() const;
};

enum class PoseKind { training, candidate };

std::string_view to_string(PoseKind kind);
PoseKind pose_kind_from_string(std::string_view s);

/// Pinhole camera in OpenCV convention (+x right, +y down, +z forward).
/// `rotation` and `translation` map world points into the camera frame.
struct CameraPose {
    int id = 0;
    PoseKind kind = PoseKind::training;
    Quat rotation = Quat::Identity();
    Vec3 translation = Vec3::Zero();
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.5;
    double cy = 0.5;
    int width = 1;
    int height = 1;
    double near = 0.01;
    double far = 100.0;

    Vec3 center() const;
    Mat3 world_to_camera() const { return rotation.toRotationMatrix(); }

    /// Camera axes expressed in world coordinates.
    Vec3 right() const;
    Vec3 down() const;
    Vec3 forward() const;

    void set_center(const Vec3& c);
    Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }

    /// Same pose with intrinsics rescaled to a new image size.
    CameraPose resized(int new_width, int new_height) const;

    /// Throws InvalidArgument if the rotation is not a proper unit quaternion
    /// or the depth range is invalid.
    void validate() const;
};

struct SceneBounds {
    Vec3 min_corner = Vec3::Zero();
    Vec3 max_corner = Vec3::Ones();

    Vec3 extent() const { return max_corner - min_corner; }
    Vec3 center() const { return 0.5 * (min_corner + max_corner); }
    double diagonal() const { return extent().norm(); }
    double volume() const;
    bool contains(const Vec3& p) const;
    bool valid() const;
};

/// World-to-camera rotation for a camera at `eye` looking at `target`.
/// Throws DegenerateLookAt when the two points coincide.
Quat look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& world_up);

/// Geodesic angle between two rotations, radians in [0, pi].
double rotation_angle(const Quat& a, const Quat& b);

double logistic(double x);
double logit(double p);

} // namespace viewforge
