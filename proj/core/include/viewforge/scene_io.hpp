#pragma once

#include "viewforge/scene.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace viewforge {

/// Reads the standard 3DGS vertex layout (x/y/z, f_dc_*, opacity, scale_*,
/// rot_*) from ASCII or binary little-endian PLY. Higher SH bands and other
/// extra properties are skipped with a warning.
GaussianScene load_gaussian_ply(const std::filesystem::path& path);

/// Binary little-endian float32, the layout produced by 3DGS trainers.
void write_gaussian_ply(const GaussianScene& scene, const std::filesystem::path& path);

enum class CameraFormat { colmap_text, transforms_json };

CameraFormat camera_format_from_string(std::string_view s);

struct CameraLoadOptions {
    /// When set and the file carries no depth range, near/far become
    /// 0.01x and 10x the bounds diagonal.
    std::optional<SceneBounds> bounds;
};

/// colmap_text: `path` is a directory holding cameras.txt and images.txt
/// (poses sorted by image name). transforms_json: `path` is the manifest.
/// Ids are dense from 0 in the resulting order.
std::vector<CameraPose> load_cameras(const std::filesystem::path& path, CameraFormat format,
                                     const CameraLoadOptions& options = {});

void write_transforms_json(const std::vector<CameraPose>& cameras, const std::filesystem::path& path);
void write_colmap_text(const std::vector<CameraPose>& cameras, const std::filesystem::path& dir);

/// Overwrites near/far on every camera from the bounds diagonal.
void apply_default_depth_range(std::vector<CameraPose>& cameras, const SceneBounds& bounds);

/// Per-axis quantile box of the primitive centers (linear interpolation
/// between order statistics), then grown by `pad` x extent on each side:
/// pad 0.05 turns a unit cube into a centered box of extent 1.1.
SceneBounds compute_bounds(const GaussianScene& scene, double lo_quantile = 0.01,
                           double hi_quantile = 0.99, double pad = 0.05);

} // namespace viewforge
