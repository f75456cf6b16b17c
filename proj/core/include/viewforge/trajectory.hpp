#pragma once

#include "viewforge/certainty_grid.hpp"
#include "viewforge/scene.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace viewforge {

enum class TrajectoryMode {
    orbit,
    spiral,
    lemniscate,
    interpolation,
    move_up,
    move_down,
    move_left,
    move_right,
    dollyzoom_in,
    dollyzoom_out,
};

inline constexpr std::array<TrajectoryMode, 10> kAllModes = {
    TrajectoryMode::orbit,        TrajectoryMode::spiral,     TrajectoryMode::lemniscate,
    TrajectoryMode::interpolation, TrajectoryMode::move_up,   TrajectoryMode::move_down,
    TrajectoryMode::move_left,    TrajectoryMode::move_right, TrajectoryMode::dollyzoom_in,
    TrajectoryMode::dollyzoom_out,
};

std::string_view to_string(TrajectoryMode mode);
TrajectoryMode trajectory_mode_from_string(std::string_view s);

/// Modes whose frames look at a certainty-sampled point.
bool is_object_centric(TrajectoryMode mode);

enum class AnchorMethod { kmeans, farthest_point };

std::string_view to_string(AnchorMethod method);
AnchorMethod anchor_method_from_string(std::string_view s);

struct PlacementConfig {
    int num_anchors = 10;
    int frames_per_traj = 20;
    AnchorMethod anchor_method = AnchorMethod::kmeans;
    /// Anchor perturbation: per-anchor sigma drawn from U[0, anchor_pos_sigma].
    double anchor_pos_sigma = 0.1;
    double anchor_rot_jitter_deg = 20.0;
    /// Pool perturbation on the jittered subset: sigma from U[0, pool_pos_sigma].
    double pool_pos_sigma = 0.5;
    double pool_rot_jitter_deg = 30.0;
    double jitter_fraction = 0.5;
    double central_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct CandidatePose {
    CameraPose pose;
    TrajectoryMode mode = TrajectoryMode::orbit;
    int anchor_id = 0;
    int frame_index = 0;
    std::optional<Vec3> lookat;
    bool jittered = false;
};

/// Scene-level inputs shared by every trajectory.
struct TrajectoryContext {
    Vec3 world_up = Vec3::UnitY();
    double bounds_diagonal = 1.0;
    /// End pose for `interpolation`.
    std::optional<CameraPose> partner;
};

/// Up direction inferred from the training rig: the least-variance axis of
/// camera centers when the rig is close to planar, otherwise the mean camera
/// up vector, falling back to +y. Oriented to agree with the cameras' up.
Vec3 estimate_world_up(const std::vector<CameraPose>& training);

std::vector<CameraPose> select_anchors(const std::vector<CameraPose>& training, const PlacementConfig& config);

/// One parametric trajectory of `length` frames. Frame 0 of every mode except
/// lemniscate is the anchor position. Throws DegenerateLookAt when a frame
/// would sit on the look-at point.
std::vector<CandidatePose> generate_trajectory(TrajectoryMode mode, const CameraPose& anchor, const Vec3& lookat,
                                               int length, const TrajectoryContext& context);

/// Perturbs the camera center by N(0, pos_sigma^2 I) and composes the rotation
/// with a random-axis rotation of angle U[-rot_jitter_deg, rot_jitter_deg].
CameraPose jitter_pose(const CameraPose& pose, double pos_sigma, double rot_jitter_deg, std::uint64_t rng_seed);

/// 10 modes x anchors x frames candidates in (mode, anchor, frame) order.
/// Candidate ids start after the largest training id.
std::vector<CandidatePose> generate_candidate_pool(const std::vector<CameraPose>& training,
                                                   const CertaintyGrid& grid, const PlacementConfig& config);

void write_candidates_json(const std::vector<CandidatePose>& pool, const std::filesystem::path& path);
std::vector<CandidatePose> read_candidates_json(const std::filesystem::path& path);

} // namespace viewforge
