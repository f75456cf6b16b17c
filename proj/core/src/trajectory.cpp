#include "viewforge/trajectory.hpp"

#include "json_util.hpp"
#include "viewforge/error.hpp"
#include "viewforge/parallel.hpp"
#include "viewforge/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace viewforge {

namespace {

constexpr std::array<std::string_view, 10> kModeNames = {
    "orbit",     "spiral",    "lemniscate", "interpolation", "move_up",
    "move_down", "move_left", "move_right", "dollyzoom_in",  "dollyzoom_out",
};

constexpr double kDegToRad = std::numbers::pi / 180.0;

} // namespace

std::string_view to_string(TrajectoryMode mode) { return kModeNames[static_cast<std::size_t>(mode)]; }

TrajectoryMode trajectory_mode_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kModeNames.size(); ++i) {
        if (kModeNames[i] == s) return static_cast<TrajectoryMode>(i);
    }
    throw Error(ErrorCode::MalformedFile, "unknown trajectory mode '" + std::string(s) + "'");
}

bool is_object_centric(TrajectoryMode mode) {
    return mode == TrajectoryMode::orbit || mode == TrajectoryMode::spiral || mode == TrajectoryMode::lemniscate ||
           mode == TrajectoryMode::interpolation;
}

std::string_view to_string(AnchorMethod method) {
    return method == AnchorMethod::kmeans ? "kmeans" : "farthest_point";
}

AnchorMethod anchor_method_from_string(std::string_view s) {
    if (s == "kmeans") return AnchorMethod::kmeans;
    if (s == "farthest_point") return AnchorMethod::farthest_point;
    throw Error(ErrorCode::InvalidArgument, "unknown anchor method '" + std::string(s) + "'");
}

void PlacementConfig::validate() const {
    if (num_anchors < 1) throw Error(ErrorCode::InvalidArgument, "num_anchors must be >= 1");
    if (frames_per_traj < 2) throw Error(ErrorCode::InvalidArgument, "frames_per_traj must be >= 2");
    if (anchor_pos_sigma < 0 || pool_pos_sigma < 0 || anchor_rot_jitter_deg < 0 || pool_rot_jitter_deg < 0) {
        throw Error(ErrorCode::InvalidArgument, "jitter magnitudes must be non-negative");
    }
    if (!(jitter_fraction >= 0.0 && jitter_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "jitter_fraction must lie in [0, 1]");
    }
    if (!(central_fraction > 0.0 && central_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "central_fraction must lie in (0, 1]");
    }
}

Vec3 estimate_world_up(const std::vector<CameraPose>& training) {
    if (training.empty()) return Vec3::UnitY();
    Vec3 mean_up = Vec3::Zero();
    for (const auto& p : training) mean_up -= p.down();
    const bool have_up = mean_up.norm() > 1e-6 * static_cast<double>(training.size());
    if (training.size() >= 3) {
        Vec3 mean = Vec3::Zero();
        for (const auto& p : training) mean += p.center();
        mean /= static_cast<double>(training.size());
        Mat3 cov = Mat3::Zero();
        for (const auto& p : training) {
            const Vec3 d = p.center() - mean;
            cov += d * d.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        const Vec3 values = eig.eigenvalues();  // ascending
        if (values(1) > 1e-12 && values(0) < 0.1 * values(1)) {
            Vec3 normal = eig.eigenvectors().col(0).normalized();
            const Vec3 reference = have_up ? mean_up : Vec3::UnitY();
            if (normal.dot(reference) < 0) normal = -normal;
            return normal;
        }
    }
    return have_up ? Vec3(mean_up.normalized()) : Vec3::UnitY();
}

namespace {

std::size_t nearest_index(const std::vector<CameraPose>& poses, const Vec3& point) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const double d = (poses[i].center() - point).squaredNorm();
        if (d < best_d || (d == best_d && poses[i].id < poses[best].id)) {
            best = i;
            best_d = d;
        }
    }
    return best;
}

std::vector<Vec3> kmeans_centroids(const std::vector<Vec3>& points, int k, std::uint64_t seed) {
    constexpr int kRestarts = 10;
    constexpr int kIterations = 50;
    std::mt19937_64 rng(seed);
    std::vector<Vec3> best;
    double best_inertia = std::numeric_limits<double>::infinity();
    std::vector<int> label(points.size());
    for (int restart = 0; restart < kRestarts; ++restart) {
        // k-means++ seeding.
        std::vector<Vec3> centroids;
        centroids.push_back(points[std::uniform_int_distribution<std::size_t>(0, points.size() - 1)(rng)]);
        std::vector<double> d2(points.size());
        while (static_cast<int>(centroids.size()) < k) {
            double total = 0.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                double m = std::numeric_limits<double>::infinity();
                for (const auto& c : centroids) m = std::min(m, (points[i] - c).squaredNorm());
                d2[i] = m;
                total += m;
            }
            std::size_t pick = 0;
            if (total > 0.0) {
                double u = std::uniform_real_distribution<double>(0.0, total)(rng);
                for (pick = 0; pick + 1 < points.size() && u >= d2[pick]; ++pick) u -= d2[pick];
            } else {
                pick = std::uniform_int_distribution<std::size_t>(0, points.size() - 1)(rng);
            }
            centroids.push_back(points[pick]);
        }
        for (int it = 0; it < kIterations; ++it) {
            bool changed = false;
            for (std::size_t i = 0; i < points.size(); ++i) {
                int arg = 0;
                double m = std::numeric_limits<double>::infinity();
                for (int c = 0; c < k; ++c) {
                    const double d = (points[i] - centroids[c]).squaredNorm();
                    if (d < m) {
                        m = d;
                        arg = c;
                    }
                }
                if (it == 0 || label[i] != arg) changed = true;
                label[i] = arg;
            }
            std::vector<Vec3> sum(k, Vec3::Zero());
            std::vector<int> count(k, 0);
            for (std::size_t i = 0; i < points.size(); ++i) {
                sum[label[i]] += points[i];
                ++count[label[i]];
            }
            for (int c = 0; c < k; ++c) {
                if (count[c] > 0) centroids[c] = sum[c] / count[c];
            }
            if (!changed) break;
        }
        double inertia = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) inertia += (points[i] - centroids[label[i]]).squaredNorm();
        if (inertia < best_inertia) {
            best_inertia = inertia;
            best = centroids;
        }
    }
    return best;
}

} // namespace

std::vector<CameraPose> select_anchors(const std::vector<CameraPose>& training, const PlacementConfig& config) {
    if (training.empty()) throw Error(ErrorCode::InvalidArgument, "anchor selection needs training poses");
    const auto k = static_cast<std::size_t>(std::min<std::size_t>(config.num_anchors, training.size()));
    if (k == training.size()) return training;

    std::vector<Vec3> centers;
    centers.reserve(training.size());
    for (const auto& p : training) centers.push_back(p.center());

    std::vector<bool> used(training.size(), false);
    std::vector<std::size_t> picked;
    if (config.anchor_method == AnchorMethod::kmeans) {
        const auto centroids =
            kmeans_centroids(centers, static_cast<int>(k), derive_seed(config.seed, "anchors.kmeans"));
        for (const auto& c : centroids) {
            // Nearest unused pose; two centroids never share an anchor.
            std::size_t best = training.size();
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < training.size(); ++i) {
                if (used[i]) continue;
                const double d = (centers[i] - c).squaredNorm();
                if (d < best_d || (d == best_d && training[i].id < training[best].id)) {
                    best = i;
                    best_d = d;
                }
            }
            used[best] = true;
            picked.push_back(best);
        }
    } else {
        Vec3 centroid = Vec3::Zero();
        for (const auto& c : centers) centroid += c;
        centroid /= static_cast<double>(centers.size());
        const std::size_t seed = nearest_index(training, centroid);
        std::vector<double> min_d(training.size());
        for (std::size_t i = 0; i < training.size(); ++i) min_d[i] = (centers[i] - centers[seed]).squaredNorm();
        while (picked.size() < k) {
            std::size_t best = training.size();
            for (std::size_t i = 0; i < training.size(); ++i) {
                if (used[i]) continue;
                if (best == training.size() || min_d[i] > min_d[best] ||
                    (min_d[i] == min_d[best] && training[i].id < training[best].id)) {
                    best = i;
                }
            }
            used[best] = true;
            picked.push_back(best);
            for (std::size_t i = 0; i < training.size(); ++i) {
                min_d[i] = std::min(min_d[i], (centers[i] - centers[best]).squaredNorm());
            }
        }
    }
    std::sort(picked.begin(), picked.end(), [&](std::size_t a, std::size_t b) { return training[a].id < training[b].id; });
    std::vector<CameraPose> anchors;
    for (const std::size_t i : picked) anchors.push_back(training[i]);
    return anchors;
}

namespace {

CandidatePose make_frame(const CameraPose& anchor, TrajectoryMode mode, int frame, const Quat& rotation,
                         const Vec3& center, std::optional<Vec3> lookat) {
    CandidatePose c;
    c.pose = anchor;
    c.pose.kind = PoseKind::candidate;
    c.pose.rotation = rotation.normalized();
    c.pose.set_center(center);
    c.mode = mode;
    c.anchor_id = anchor.id;
    c.frame_index = frame;
    c.lookat = lookat;
    return c;
}

struct OrbitFrame {
    Vec3 center;      // circle center in the anchor's horizontal plane
    Vec3 u, v;        // in-plane basis, u toward the anchor
    double radius;    // in-plane radius
};

OrbitFrame orbit_frame(const Vec3& anchor_center, const Vec3& lookat, const Vec3& up) {
    const Vec3 offset = anchor_center - lookat;
    const double r = offset.norm();
    OrbitFrame f;
    const double height = offset.dot(up);
    f.center = lookat + height * up;
    Vec3 radial = anchor_center - f.center;
    f.radius = radial.norm();
    if (f.radius < 1e-9 * r) {
        // Anchor straight above the target: orbit through the target's plane.
        const Vec3 alt = std::abs(up.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitZ();
        radial = up.cross(alt);
        f.center = lookat;
        f.radius = r;
    }
    f.u = radial.normalized();
    f.v = up.cross(f.u).normalized();
    return f;
}

void require_distinct(const Vec3& position, const Vec3& lookat, double scale) {
    if ((position - lookat).norm() <= 1e-9 * std::max(scale, 1e-300)) {
        throw Error(ErrorCode::DegenerateLookAt, "trajectory frame coincides with the look-at point");
    }
}

} // namespace

std::vector<CandidatePose> generate_trajectory(TrajectoryMode mode, const CameraPose& anchor, const Vec3& lookat,
                                               int length, const TrajectoryContext& context) {
    if (length < 2) throw Error(ErrorCode::InvalidArgument, "trajectory length must be >= 2");
    const Vec3 up = context.world_up.normalized();
    const Vec3 a = anchor.center();
    const double two_pi = 2.0 * std::numbers::pi;
    const double last = static_cast<double>(length - 1);
    std::vector<CandidatePose> frames;
    frames.reserve(static_cast<std::size_t>(length));

    const double r = (a - lookat).norm();
    if (is_object_centric(mode) && mode != TrajectoryMode::interpolation) {
        if (r <= 1e-12 * std::max(1.0, context.bounds_diagonal)) {
            throw Error(ErrorCode::DegenerateLookAt, "look-at point coincides with the anchor center");
        }
    }

    switch (mode) {
    case TrajectoryMode::orbit:
    case TrajectoryMode::spiral:
    case TrajectoryMode::lemniscate: {
        const OrbitFrame f = orbit_frame(a, lookat, up);
        for (int i = 0; i < length; ++i) {
            Vec3 p;
            if (mode == TrajectoryMode::orbit) {
                const double theta = two_pi * i / length;
                p = f.center + f.radius * (std::cos(theta) * f.u + std::sin(theta) * f.v);
            } else if (mode == TrajectoryMode::spiral) {
                const double theta = two_pi * i / length;
                const double shrink = 1.0 - 0.5 * i / last;
                const double lift = 0.2 * r * std::sin(two_pi * i / last);
                p = f.center + shrink * f.radius * (std::cos(theta) * f.u + std::sin(theta) * f.v) + lift * up;
            } else {
                // Half-step phase keeps frames off the figure-eight crossing.
                const double theta = two_pi * (i + 0.5) / length;
                const double s = std::sin(theta);
                const double c = std::cos(theta);
                const double denom = 1.0 + s * s;
                p = f.center + (f.radius * c / denom) * f.u + (f.radius * s * c / denom) * f.v;
            }
            require_distinct(p, lookat, r);
            frames.push_back(make_frame(anchor, mode, i, look_at_rotation(p, lookat, up), p, lookat));
        }
        break;
    }
    case TrajectoryMode::interpolation: {
        if (!context.partner) throw Error(ErrorCode::InvalidArgument, "interpolation needs a partner pose");
        const CameraPose& b = *context.partner;
        const Vec3 bc = b.center();
        for (int i = 0; i < length; ++i) {
            const double t = i / last;
            CandidatePose frame;
            if (i == 0) {
                frame = make_frame(anchor, mode, i, anchor.rotation, a, lookat);
                frame.pose.rotation = anchor.rotation;
                frame.pose.translation = anchor.translation;
            } else if (i == length - 1) {
                frame = make_frame(anchor, mode, i, b.rotation, bc, lookat);
                frame.pose.rotation = b.rotation;
                frame.pose.translation = b.translation;
            } else {
                frame = make_frame(anchor, mode, i, anchor.rotation.slerp(t, b.rotation), (1.0 - t) * a + t * bc,
                                   lookat);
            }
            frames.push_back(frame);
        }
        break;
    }
    case TrajectoryMode::move_up:
    case TrajectoryMode::move_down:
    case TrajectoryMode::move_left:
    case TrajectoryMode::move_right: {
        Vec3 dir;
        switch (mode) {
        case TrajectoryMode::move_up: dir = -anchor.down(); break;
        case TrajectoryMode::move_down: dir = anchor.down(); break;
        case TrajectoryMode::move_left: dir = -anchor.right(); break;
        default: dir = anchor.right(); break;
        }
        const double step = 0.02 * context.bounds_diagonal;
        for (int i = 0; i < length; ++i) {
            frames.push_back(make_frame(anchor, mode, i, anchor.rotation, a + step * i * dir, std::nullopt));
        }
        break;
    }
    case TrajectoryMode::dollyzoom_in:
    case TrajectoryMode::dollyzoom_out: {
        const Vec3 fwd = anchor.forward();
        const double d0 = (lookat - a).dot(fwd);
        if (!(d0 > 1e-12 * std::max(1.0, context.bounds_diagonal))) {
            throw Error(ErrorCode::DegenerateLookAt, "dolly-zoom look-at plane must lie in front of the anchor");
        }
        double step = 0.02 * context.bounds_diagonal;
        double sign = 1.0;
        if (mode == TrajectoryMode::dollyzoom_in) {
            // Never travel past half the focus distance.
            step = std::min(step, 0.5 * d0 / last);
        } else {
            sign = -1.0;
        }
        for (int i = 0; i < length; ++i) {
            const Vec3 p = a + sign * step * i * fwd;
            const double di = (lookat - p).dot(fwd);
            CandidatePose frame = make_frame(anchor, mode, i, anchor.rotation, p, std::nullopt);
            frame.pose.fx = anchor.fx * di / d0;
            frame.pose.fy = anchor.fy * di / d0;
            frames.push_back(frame);
        }
        break;
    }
    }
    return frames;
}

CameraPose jitter_pose(const CameraPose& pose, double pos_sigma, double rot_jitter_deg, std::uint64_t rng_seed) {
    if (pos_sigma < 0.0 || rot_jitter_deg < 0.0) throw Error(ErrorCode::InvalidArgument, "jitter must be >= 0");
    if (pos_sigma == 0.0 && rot_jitter_deg == 0.0) return pose;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vec3 noise(gauss(rng), gauss(rng), gauss(rng));
    Vec3 axis(gauss(rng), gauss(rng), gauss(rng));
    if (axis.norm() < 1e-12) axis = Vec3::UnitZ();
    axis.normalize();
    const double angle =
        std::uniform_real_distribution<double>(-rot_jitter_deg, rot_jitter_deg)(rng) * kDegToRad;

    CameraPose out = pose;
    const Vec3 center = pose.center() + pos_sigma * noise;
    out.rotation = (Quat(Eigen::AngleAxisd(angle, axis)) * pose.rotation).normalized();
    out.set_center(center);
    return out;
}

std::vector<CandidatePose> generate_candidate_pool(const std::vector<CameraPose>& training,
                                                   const CertaintyGrid& grid, const PlacementConfig& config) {
    config.validate();
    if (training.empty()) throw Error(ErrorCode::InvalidArgument, "candidate pool needs training poses");
    if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "candidate pool needs a non-empty certainty grid");

    const std::vector<CameraPose> anchors = select_anchors(training, config);
    const Vec3 up = estimate_world_up(training);
    const double diag = grid.bounds().diagonal();
    const auto num_anchors = anchors.size();
    const auto length = static_cast<std::size_t>(config.frames_per_traj);
    int first_id = 0;
    for (const auto& t : training) first_id = std::max(first_id, t.id + 1);

    // Interpolation partner: nearest other anchor, else nearest other training pose.
    std::vector<std::optional<CameraPose>> partners(num_anchors);
    for (std::size_t a = 0; a < num_anchors; ++a) {
        const std::vector<CameraPose>& pool = num_anchors > 1 ? anchors : training;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : pool) {
            if (p.id == anchors[a].id) continue;
            const double d = (p.center() - anchors[a].center()).squaredNorm();
            if (d < best) {
                best = d;
                partners[a] = p;
            }
        }
    }

    std::vector<CandidatePose> pool(kAllModes.size() * num_anchors * length);
    parallel_for(0, kAllModes.size() * num_anchors, [&](std::size_t pair) {
        const std::size_t m = pair / num_anchors;
        const std::size_t a = pair % num_anchors;
        const TrajectoryMode mode = kAllModes[m];
        std::mt19937_64 rng(derive_seed(config.seed, {m, a}));
        auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

        const CameraPose anchor =
            jitter_pose(anchors[a], uniform(0.0, config.anchor_pos_sigma), config.anchor_rot_jitter_deg, rng());
        TrajectoryContext context{up, diag, partners[a]};
        if (!context.partner) {
            // Single-camera rig: blend toward a view of the look-at point from halfway in.
            context.partner = anchor;
        }

        std::vector<CandidatePose> frames;
        for (int attempt = 0;; ++attempt) {
            Vec3 lookat = sample_lookat(grid, config.central_fraction, rng());
            if (mode == TrajectoryMode::dollyzoom_in || mode == TrajectoryMode::dollyzoom_out) {
                const double depth = std::clamp((lookat - anchor.center()).dot(anchor.forward()), 0.1 * diag, diag);
                lookat = anchor.center() + depth * anchor.forward();
            }
            if (mode == TrajectoryMode::interpolation && !partners[a]) {
                const Vec3 mid = anchor.center() + 0.5 * (lookat - anchor.center());
                context.partner->rotation = look_at_rotation(mid, lookat, up);
                context.partner->set_center(mid);
            }
            try {
                frames = generate_trajectory(mode, anchor, lookat, config.frames_per_traj, context);
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegenerateLookAt || attempt >= 32) throw;
            }
        }

        for (std::size_t f = 0; f < length; ++f) {
            CandidatePose& c = frames[f];
            c.anchor_id = anchors[a].id;
            if (uniform(0.0, 1.0) < config.jitter_fraction) {
                const double sigma = uniform(0.0, config.pool_pos_sigma);
                c.pose = jitter_pose(c.pose, sigma, config.pool_rot_jitter_deg, rng());
                c.jittered = true;
            }
            const std::size_t index = pair * length + f;
            c.pose.id = first_id + static_cast<int>(index);
            c.pose.kind = PoseKind::candidate;
            pool[index] = std::move(c);
        }
    });
    return pool;
}

void write_candidates_json(const std::vector<CandidatePose>& pool, const std::filesystem::path& path) {
    using detail::json;
    json doc = json::array();
    for (const auto& c : pool) {
        json j = detail::pose_to_json(c.pose);
        j["mode"] = std::string(to_string(c.mode));
        j["anchor_id"] = c.anchor_id;
        j["frame_index"] = c.frame_index;
        j["lookat"] = c.lookat ? detail::vec_to_json(*c.lookat) : json(nullptr);
        j["jittered"] = c.jittered;
        doc.push_back(std::move(j));
    }
    detail::write_json_file(doc, path);
}

std::vector<CandidatePose> read_candidates_json(const std::filesystem::path& path) {
    const auto doc = detail::read_json_file(path);
    if (!doc.is_array()) throw Error(ErrorCode::MalformedFile, path.string() + ": expected an array");
    std::vector<CandidatePose> pool;
    pool.reserve(doc.size());
    for (const auto& j : doc) {
        CandidatePose c;
        c.pose = detail::pose_from_json(j);
        try {
            c.mode = trajectory_mode_from_string(j.at("mode").get<std::string>());
            c.anchor_id = j.at("anchor_id").get<int>();
            c.frame_index = j.at("frame_index").get<int>();
            if (!j.at("lookat").is_null()) c.lookat = detail::vec_from_json(j.at("lookat"));
            c.jittered = j.value("jittered", false);
        } catch (const detail::json::exception& e) {
            throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
        }
        pool.push_back(std::move(c));
    }
    return pool;
}

} // namespace viewforge
