#pragma once

#include "viewforge/scene.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace viewforge {

using VoxelCoord = std::array<int, 3>;

struct GridCell {
    std::uint64_t index;  ///< linearized as (x * R + y) * R + z
    double certainty;
};

/// Sparse R^3 voxelization of the scene bounds. Cells are kept sorted by
/// linear index and only cells with positive certainty are stored, so a
/// cell's position in `cells()` doubles as a compact voxel id.
class CertaintyGrid {
public:
    CertaintyGrid() = default;
    CertaintyGrid(SceneBounds bounds, int resolution, double epsilon, std::vector<GridCell> cells);

    const SceneBounds& bounds() const noexcept { return bounds_; }
    int resolution() const noexcept { return resolution_; }
    double epsilon() const noexcept { return epsilon_; }
    std::span<const GridCell> cells() const noexcept { return cells_; }
    std::size_t occupied() const noexcept { return cells_.size(); }
    bool empty() const noexcept { return cells_.empty(); }

    double total_certainty() const;

    /// Certainty of a voxel, 0 when unoccupied.
    double certainty(const VoxelCoord& v) const;
    std::optional<std::size_t> find(std::uint64_t index) const;

    std::uint64_t linear_index(const VoxelCoord& v) const;
    VoxelCoord coord(std::uint64_t index) const;

    /// Voxel containing `p` under the half-open [min, max) convention; a point
    /// on the max face is outside.
    std::optional<VoxelCoord> voxel_of(const Vec3& p) const;
    Vec3 voxel_center(const VoxelCoord& v) const;
    Vec3 voxel_center(std::uint64_t index) const { return voxel_center(coord(index)); }

private:
    SceneBounds bounds_;
    int resolution_ = 0;
    double epsilon_ = 1e-8;
    std::vector<GridCell> cells_;
};

/// C(v) = sum over primitives centered in v of opacity / (volume + eps).
/// Accumulation runs in primitive-index order per voxel, independent of the
/// number of workers.
CertaintyGrid build_certainty_grid(const GaussianScene& scene, const SceneBounds& bounds, int resolution = 128,
                                   double epsilon = 1e-8);

/// Per-primitive certainty term opacity / (volume + eps).
double primitive_certainty(const GaussianScene& scene, std::size_t i, double epsilon);

/// Center of an occupied voxel drawn proportionally to certainty among voxels
/// whose indices lie in the central `central_fraction` of every axis; the
/// whole grid is used when that region holds no occupied voxel.
Vec3 sample_lookat(const CertaintyGrid& grid, double central_fraction, std::uint64_t rng_seed);

/// Binary sidecar: magic "VFGRID01", bounds (6 x f64), R (u32), eps (f64),
/// cell count (u64), then (u64 index, f64 certainty) pairs; little-endian.
void write_grid_binary(const CertaintyGrid& grid, const std::filesystem::path& path);
CertaintyGrid read_grid_binary(const std::filesystem::path& path);
void write_grid_json(const CertaintyGrid& grid, const std::filesystem::path& path);

} // namespace viewforge
