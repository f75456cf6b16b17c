#pragma once

#include "viewforge/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace viewforge {

/// A small closed room: flat tiles for walls, floor and ceiling plus clusters
/// of small opaque primitives in the middle. World up is +y.
struct SyntheticRoom {
    GaussianScene scene;
    std::vector<CameraPose> cameras;
};

struct SyntheticRoomOptions {
    int num_primitives = 200;
    int num_cameras = 24;
    int image_width = 512;
    int image_height = 384;
    std::uint64_t seed = 7;
};

SyntheticRoom make_synthetic_room(const SyntheticRoomOptions& options = {});

/// Writes scene.ply, transforms.json and pipeline.cfg into `dir`.
void write_synthetic_bundle(const SyntheticRoom& room, const std::filesystem::path& dir);

} // namespace viewforge
