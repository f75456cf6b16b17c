#pragma once

// Independent reference implementations and fixtures shared by the tests.

#include "viewforge/certainty_grid.hpp"
#include "viewforge/image.hpp"
#include "viewforge/scene.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace vft {

using namespace viewforge;

class TempDir {
public:
    explicit TempDir(const std::string& tag);
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

SceneBounds unit_bounds();

GaussianScene random_scene(std::mt19937_64& rng, int count, const SceneBounds& box, double log_scale_lo = -3.0,
                           double log_scale_hi = -0.5);

/// Pinhole camera at `eye` looking at `target` (OpenCV axes).
CameraPose make_camera(const Vec3& eye, const Vec3& target, int id = 0, int width = 64, int height = 48,
                       double focal = 50.0, double near = 0.01, double far = 100.0);

/// Camera somewhere around the box looking at a random interior point.
CameraPose random_camera(std::mt19937_64& rng, const SceneBounds& box, int id = 0);

/// Certainty per voxel on a dense R^3 array, indexed (x * R + y) * R + z,
/// by looping over voxels and testing each primitive against the voxel box.
std::vector<double> dense_certainty(const GaussianScene& scene, const SceneBounds& bounds, int resolution,
                                    double epsilon);

/// Dense weighted visibility: certainty of every voxel whose center projects
/// into the image strictly between near and far.
std::vector<double> dense_visibility(const CameraPose& pose, const CertaintyGrid& grid);

double dense_wiou(const std::vector<double>& a, const std::vector<double>& b);

/// Greedy replay over an explicit pairwise matrix indexed by position.
std::vector<int> greedy_nms(const std::vector<std::vector<double>>& overlap, const std::vector<double>& score,
                            const std::vector<int>& seeded, const std::vector<int>& candidates, double threshold,
                            int limit);

/// SSIM by explicit 2D window sums at every valid position.
double ssim_brute_force(const Image& a, const Image& b, int window = 11, double sigma = 1.5, double k1 = 0.01,
                        double k2 = 0.03);

Image random_image(std::mt19937_64& rng, int width, int height, int channels);


} // namespace vft
