#include "viewforge/certainty_grid.hpp"

#include "viewforge/error.hpp"
#include "viewforge/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

namespace viewforge {

namespace fs = std::filesystem;

CertaintyGrid::CertaintyGrid(SceneBounds bounds, int resolution, double epsilon, std::vector<GridCell> cells)
    : bounds_(bounds), resolution_(resolution), epsilon_(epsilon), cells_(std::move(cells)) {
    if (resolution_ < 2) throw Error(ErrorCode::ResolutionTooSmall, "grid resolution must be >= 2");
    if (!bounds_.valid()) throw Error(ErrorCode::DegenerateBounds, "grid bounds must satisfy min < max");
    std::sort(cells_.begin(), cells_.end(), [](const GridCell& a, const GridCell& b) { return a.index < b.index; });
}

double CertaintyGrid::total_certainty() const {
    double total = 0.0;
    for (const auto& c : cells_) total += c.certainty;
    return total;
}

std::optional<std::size_t> CertaintyGrid::find(std::uint64_t index) const {
    const auto it = std::lower_bound(cells_.begin(), cells_.end(), index,
                                     [](const GridCell& c, std::uint64_t i) { return c.index < i; });
    if (it == cells_.end() || it->index != index) return std::nullopt;
    return static_cast<std::size_t>(it - cells_.begin());
}

double CertaintyGrid::certainty(const VoxelCoord& v) const {
    const auto slot = find(linear_index(v));
    return slot ? cells_[*slot].certainty : 0.0;
}

std::uint64_t CertaintyGrid::linear_index(const VoxelCoord& v) const {
    const auto r = static_cast<std::uint64_t>(resolution_);
    return (static_cast<std::uint64_t>(v[0]) * r + static_cast<std::uint64_t>(v[1])) * r +
           static_cast<std::uint64_t>(v[2]);
}

VoxelCoord CertaintyGrid::coord(std::uint64_t index) const {
    const auto r = static_cast<std::uint64_t>(resolution_);
    return {static_cast<int>(index / (r * r)), static_cast<int>((index / r) % r), static_cast<int>(index % r)};
}

std::optional<VoxelCoord> CertaintyGrid::voxel_of(const Vec3& p) const {
    VoxelCoord v{};
    const Vec3 extent = bounds_.extent();
    for (int axis = 0; axis < 3; ++axis) {
        // Normalize first, then scale: keeps floor(t * 2R) / 2 == floor(t * R).
        const double t = (p[axis] - bounds_.min_corner[axis]) / extent[axis];
        if (!(t >= 0.0)) return std::nullopt;
        const double cell = std::floor(t * resolution_);
        if (cell >= resolution_) return std::nullopt;
        v[axis] = static_cast<int>(cell);
    }
    return v;
}

Vec3 CertaintyGrid::voxel_center(const VoxelCoord& v) const {
    const Vec3 extent = bounds_.extent();
    Vec3 c;
    for (int axis = 0; axis < 3; ++axis) {
        c[axis] = bounds_.min_corner[axis] + (v[axis] + 0.5) * extent[axis] / resolution_;
    }
    return c;
}

double primitive_certainty(const GaussianScene& scene, std::size_t i, double epsilon) {
    return scene.opacities[i] / (scene.volume(i) + epsilon);
}

CertaintyGrid build_certainty_grid(const GaussianScene& scene, const SceneBounds& bounds, int resolution,
                                   double epsilon) {
    if (resolution < 2) throw Error(ErrorCode::ResolutionTooSmall, "grid resolution must be >= 2");
    if (!bounds.valid()) throw Error(ErrorCode::DegenerateBounds, "grid bounds must satisfy min < max");
    if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");

    const CertaintyGrid shape(bounds, resolution, epsilon, {});
    constexpr std::uint64_t kOutside = ~std::uint64_t{0};
    std::vector<std::uint64_t> voxel(scene.size(), kOutside);
    std::vector<double> value(scene.size(), 0.0);
    parallel_for(0, scene.size(), [&](std::size_t i) {
        if (const auto v = shape.voxel_of(scene.centers[i])) {
            voxel[i] = shape.linear_index(*v);
            value[i] = primitive_certainty(scene, i, epsilon);
        }
    });

    std::vector<std::uint32_t> order(scene.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return voxel[a] < voxel[b]; });

    std::vector<GridCell> cells;
    for (std::size_t k = 0; k < order.size();) {
        const std::uint64_t index = voxel[order[k]];
        if (index == kOutside) break;
        double sum = 0.0;
        for (; k < order.size() && voxel[order[k]] == index; ++k) sum += value[order[k]];
        if (sum > 0.0) cells.push_back({index, sum});
    }
    return CertaintyGrid(bounds, resolution, epsilon, std::move(cells));
}

Vec3 sample_lookat(const CertaintyGrid& grid, double central_fraction, std::uint64_t rng_seed) {
    if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "cannot sample a look-at point from an empty grid");
    if (!(central_fraction > 0.0 && central_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "central_fraction must lie in (0, 1]");
    }
    const int r = grid.resolution();
    const int lo = static_cast<int>(std::floor(r * (1.0 - central_fraction) / 2.0));
    const int hi = r - lo;

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < grid.cells().size(); ++i) {
        const VoxelCoord v = grid.coord(grid.cells()[i].index);
        if (v[0] >= lo && v[0] < hi && v[1] >= lo && v[1] < hi && v[2] >= lo && v[2] < hi) eligible.push_back(i);
    }
    if (eligible.empty()) {
        eligible.resize(grid.cells().size());
        std::iota(eligible.begin(), eligible.end(), std::size_t{0});
    }
    std::vector<double> cumulative(eligible.size());
    double running = 0.0;
    for (std::size_t k = 0; k < eligible.size(); ++k) {
        running += grid.cells()[eligible[k]].certainty;
        cumulative[k] = running;
    }
    std::mt19937_64 rng(rng_seed);
    const double u = std::uniform_real_distribution<double>(0.0, running)(rng);
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    return grid.voxel_center(grid.cells()[eligible[static_cast<std::size_t>(it - cumulative.begin())]].index);
}

namespace {

constexpr char kGridMagic[8] = {'V', 'F', 'G', 'R', 'I', 'D', '0', '1'};

template <typename T>
void put(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const fs::path& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
        throw Error(ErrorCode::MalformedFile, path.string() + ": truncated grid file");
    }
    return value;
}

} // namespace

void write_grid_binary(const CertaintyGrid& grid, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(kGridMagic, sizeof(kGridMagic));
    for (int a = 0; a < 3; ++a) put<double>(out, grid.bounds().min_corner[a]);
    for (int a = 0; a < 3; ++a) put<double>(out, grid.bounds().max_corner[a]);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.resolution()));
    put<double>(out, grid.epsilon());
    put<std::uint64_t>(out, grid.occupied());
    for (const auto& c : grid.cells()) {
        put<std::uint64_t>(out, c.index);
        put<double>(out, c.certainty);
    }
}

CertaintyGrid read_grid_binary(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kGridMagic, 8) != 0) {
        throw Error(ErrorCode::MalformedFile, path.string() + " is not a grid sidecar");
    }
    SceneBounds b;
    for (int a = 0; a < 3; ++a) b.min_corner[a] = get<double>(in, path);
    for (int a = 0; a < 3; ++a) b.max_corner[a] = get<double>(in, path);
    const auto r = get<std::uint32_t>(in, path);
    const auto eps = get<double>(in, path);
    const auto count = get<std::uint64_t>(in, path);
    const std::uint64_t limit = static_cast<std::uint64_t>(r) * r * r;
    if (count > limit) throw Error(ErrorCode::MalformedFile, path.string() + ": cell count exceeds R^3");
    std::vector<GridCell> cells(count);
    for (auto& c : cells) {
        c.index = get<std::uint64_t>(in, path);
        c.certainty = get<double>(in, path);
        if (c.index >= limit || !(c.certainty > 0.0)) {
            throw Error(ErrorCode::MalformedFile, path.string() + ": invalid cell");
        }
    }
    return CertaintyGrid(b, static_cast<int>(r), eps, std::move(cells));
}

void write_grid_json(const CertaintyGrid& grid, const fs::path& path) {
    nlohmann::json doc;
    const auto& b = grid.bounds();
    doc["bounds"] = {{"min", {b.min_corner.x(), b.min_corner.y(), b.min_corner.z()}},
                     {"max", {b.max_corner.x(), b.max_corner.y(), b.max_corner.z()}}};
    doc["resolution"] = grid.resolution();
    doc["epsilon"] = grid.epsilon();
    doc["occupied"] = grid.occupied();
    doc["total_certainty"] = grid.total_certainty();
    auto cells = nlohmann::json::array();
    for (const auto& c : grid.cells()) {
        const VoxelCoord v = grid.coord(c.index);
        cells.push_back({{"voxel", {v[0], v[1], v[2]}}, {"certainty", c.certainty}});
    }
    doc["cells"] = std::move(cells);
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << doc.dump(1) << "\n";
}

} // namespace viewforge
