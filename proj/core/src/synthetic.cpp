#include "viewforge/synthetic.hpp"

#include "viewforge/config.hpp"
#include "viewforge/error.hpp"
#include "viewforge/scene_io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace viewforge {

namespace {

constexpr double kHalf = 2.0;    // room spans [-2, 2] in x and z
constexpr double kHeight = 2.5;  // and [0, 2.5] in y

// Quaternion whose rotation maps local x, y, z onto u, v, n.
Quat frame_rotation(const Vec3& u, const Vec3& v, const Vec3& n) {
    Mat3 m;
    m.col(0) = u;
    m.col(1) = v;
    m.col(2) = n;
    return Quat(m).normalized();
}

void add_plane(GaussianScene& s, const Vec3& origin, const Vec3& u, const Vec3& v, double lu, double lv, int nu,
               int nv, const Vec3& base, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> shade(-0.12, 0.12);
    const Vec3 n = u.cross(v).normalized();
    const Quat q = frame_rotation(u, v, n);
    const double su = lu / nu;
    const double sv = lv / nv;
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
            const Vec3 c = origin + (i + 0.5) * su * u + (j + 0.5) * sv * v;
            const double checker = ((i + j) % 2 == 0) ? 0.08 : -0.08;
            Vec3 color = base + Vec3::Constant(checker + shade(rng));
            color = color.cwiseMax(0.02).cwiseMin(0.98);
            s.push_back(c, Vec3(std::log(0.5 * su), std::log(0.5 * sv), std::log(0.01)), q, 0.97, color);
        }
    }
}

} // namespace

SyntheticRoom make_synthetic_room(const SyntheticRoomOptions& o) {
    if (o.num_primitives < 120) throw Error(ErrorCode::InvalidArgument, "synthetic room needs >= 120 primitives");
    if (o.num_cameras < 3) throw Error(ErrorCode::InvalidArgument, "synthetic room needs >= 3 cameras");
    std::mt19937_64 rng(o.seed);
    SyntheticRoom room;
    GaussianScene& s = room.scene;
    s.reserve(o.num_primitives);

    const Vec3 X = Vec3::UnitX();
    const Vec3 Y = Vec3::UnitY();
    const Vec3 Z = Vec3::UnitZ();
    const double w = 2.0 * kHalf;
    // 4 walls of 5x3 tiles, floor and ceiling of 5x5: 110 primitives.
    add_plane(s, Vec3(-kHalf, 0, -kHalf), X, Y, w, kHeight, 5, 3, Vec3(0.75, 0.55, 0.45), rng);
    add_plane(s, Vec3(kHalf, 0, kHalf), -X, Y, w, kHeight, 5, 3, Vec3(0.45, 0.6, 0.75), rng);
    add_plane(s, Vec3(-kHalf, 0, kHalf), -Z, Y, w, kHeight, 5, 3, Vec3(0.55, 0.7, 0.5), rng);
    add_plane(s, Vec3(kHalf, 0, -kHalf), Z, Y, w, kHeight, 5, 3, Vec3(0.7, 0.68, 0.4), rng);
    add_plane(s, Vec3(-kHalf, 0, -kHalf), Z, X, w, w, 5, 5, Vec3(0.4, 0.35, 0.3), rng);
    add_plane(s, Vec3(-kHalf, kHeight, -kHalf), X, Z, w, w, 5, 5, Vec3(0.85, 0.85, 0.82), rng);

    // Remaining primitives: compact clusters standing on the floor.
    const std::vector<Vec3> cluster_centers = {Vec3(-0.35, 0.45, 0.2), Vec3(0.4, 0.7, -0.25), Vec3(0.05, 0.3, -0.5)};
    const std::vector<Vec3> cluster_colors = {Vec3(0.85, 0.2, 0.15), Vec3(0.15, 0.35, 0.85), Vec3(0.2, 0.75, 0.25)};
    std::normal_distribution<double> offset(0.0, 0.16);
    std::uniform_real_distribution<double> log_scale(std::log(0.035), std::log(0.07));
    std::uniform_real_distribution<double> tint(-0.1, 0.1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int remaining = o.num_primitives - static_cast<int>(s.size());
    for (int k = 0; k < remaining; ++k) {
        const std::size_t c = static_cast<std::size_t>(k) % cluster_centers.size();
        Vec3 p = cluster_centers[c] + Vec3(offset(rng), 1.6 * offset(rng), offset(rng));
        p.y() = std::max(p.y(), 0.05);
        const Quat q = Quat(gauss(rng), gauss(rng), gauss(rng), gauss(rng)).normalized();
        const Vec3 color = (cluster_colors[c] + Vec3::Constant(tint(rng))).cwiseMax(0.02).cwiseMin(0.98);
        s.push_back(p, Vec3(log_scale(rng), log_scale(rng), log_scale(rng)), q, 0.95, color);
    }

    // Ring of inward-looking cameras.
    const Vec3 target(0.0, 0.6, 0.0);
    for (int i = 0; i < o.num_cameras; ++i) {
        const double theta = 2.0 * std::numbers::pi * i / o.num_cameras;
        const double height = 1.1 + 0.15 * std::sin(3.0 * theta);
        const Vec3 eye(1.5 * std::cos(theta), height, 1.5 * std::sin(theta));
        CameraPose p;
        p.id = i;
        p.kind = PoseKind::training;
        p.rotation = look_at_rotation(eye, target, Y);
        p.set_center(eye);
        p.width = o.image_width;
        p.height = o.image_height;
        p.fx = p.fy = 0.8 * o.image_width;
        p.cx = 0.5 * o.image_width;
        p.cy = 0.5 * o.image_height;
        room.cameras.push_back(p);
    }
    apply_default_depth_range(room.cameras, compute_bounds(s));
    return room;
}

void write_synthetic_bundle(const SyntheticRoom& room, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_gaussian_ply(room.scene, dir / "scene.ply");
    write_transforms_json(room.cameras, dir / "transforms.json");
    PipelineConfig config;
    config.scene_path = "scene.ply";
    config.camera_path = "transforms.json";
    config.camera_format = CameraFormat::transforms_json;
    config.output_dir = "out";
    std::ofstream out(dir / "pipeline.cfg", std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "pipeline.cfg").string());
    out << "# Bundled synthetic room, default pipeline settings.\n" << to_config_text(config);
}

} // namespace viewforge
