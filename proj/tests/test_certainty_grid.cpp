#include "oracles.hpp"

#include "viewforge/certainty_grid.hpp"
#include "viewforge/error.hpp"
#include "viewforge/parallel.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace vft;

namespace {

GaussianScene single(const Vec3& p, double opacity, const Vec3& log_scale = Vec3::Zero()) {
    GaussianScene s;
    s.push_back(p, log_scale, Quat::Identity(), opacity, Vec3::Constant(0.5));
    return s;
}

} // namespace

TEST(CertaintyGrid, SingleUnitVolumePrimitive) {
    const CertaintyGrid g = build_certainty_grid(single(Vec3(0.3, 0.3, 0.3), 1.0), unit_bounds(), 4, 1e-8);
    ASSERT_EQ(g.occupied(), 1u);
    EXPECT_DOUBLE_EQ(g.certainty({1, 1, 1}), 1.0 / (1.0 + 1e-8));
}

TEST(CertaintyGrid, AdditiveWithinVoxel) {
    GaussianScene s = single(Vec3(0.1, 0.1, 0.1), 0.5);
    s.push_back(Vec3(0.2, 0.2, 0.2), Vec3::Zero(), Quat::Identity(), 0.5, Vec3::Zero());
    const CertaintyGrid g = build_certainty_grid(s, unit_bounds(), 4, 1e-8);
    ASSERT_EQ(g.occupied(), 1u);
    EXPECT_DOUBLE_EQ(g.certainty({0, 0, 0}), 1.0 / (1.0 + 1e-8));
}

TEST(CertaintyGrid, MatchesDenseOracle) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        const GaussianScene s = random_scene(rng, 500, unit_bounds(), -4.0, -1.0);
        const CertaintyGrid g = build_certainty_grid(s, unit_bounds(), 8, 1e-8);
        const auto dense = dense_certainty(s, unit_bounds(), 8, 1e-8);
        std::size_t nonzero = 0;
        for (int x = 0; x < 8; ++x) {
            for (int y = 0; y < 8; ++y) {
                for (int z = 0; z < 8; ++z) {
                    const double expect = dense[(x * 8 + y) * 8 + z];
                    EXPECT_NEAR(g.certainty({x, y, z}), expect, 1e-9);
                    nonzero += expect > 0.0 ? 1 : 0;
                }
            }
        }
        EXPECT_EQ(g.occupied(), nonzero);
    }
}

TEST(CertaintyGrid, Invariants) {
    std::mt19937_64 rng(4);
    SceneBounds inner;
    inner.min_corner = Vec3::Constant(-0.5);
    inner.max_corner = Vec3::Constant(1.5);
    const GaussianScene s = random_scene(rng, 300, inner);
    const CertaintyGrid g = build_certainty_grid(s, unit_bounds(), 16, 1e-8);
    EXPECT_LE(g.occupied(), std::min<std::size_t>(16 * 16 * 16, s.size()));
    double direct = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Vec3& p = s.centers[i];
        if ((p.array() >= 0.0).all() && (p.array() < 1.0).all()) direct += primitive_certainty(s, i, 1e-8);
    }
    for (const auto& c : g.cells()) EXPECT_GT(c.certainty, 0.0);
    EXPECT_NEAR(g.total_certainty(), direct, 1e-6 * direct);
}

TEST(CertaintyGrid, Monotonicity) {
    std::mt19937_64 rng(8);
    GaussianScene s = random_scene(rng, 100, unit_bounds());
    const CertaintyGrid base = build_certainty_grid(s, unit_bounds(), 8);
    const VoxelCoord v = *base.voxel_of(s.centers[17]);
    GaussianScene brighter = s;
    brighter.opacities[17] = std::min(1.0, s.opacities[17] + 0.2);
    EXPECT_GE(build_certainty_grid(brighter, unit_bounds(), 8).certainty(v), base.certainty(v));
    GaussianScene bigger = s;
    bigger.log_scales[17].x() += 0.5;
    EXPECT_LE(build_certainty_grid(bigger, unit_bounds(), 8).certainty(v), base.certainty(v));
}

TEST(CertaintyGrid, RefinementSumsChildren) {
    std::mt19937_64 rng(9);
    const GaussianScene s = random_scene(rng, 400, unit_bounds());
    const CertaintyGrid coarse = build_certainty_grid(s, unit_bounds(), 4);
    const CertaintyGrid fine = build_certainty_grid(s, unit_bounds(), 8);
    for (int x = 0; x < 4; ++x) {
        for (int y = 0; y < 4; ++y) {
            for (int z = 0; z < 4; ++z) {
                double sum = 0.0;
                for (int c = 0; c < 8; ++c) sum += fine.certainty({2 * x + (c & 1), 2 * y + ((c >> 1) & 1), 2 * z + (c >> 2)});
                const double coarse_value = coarse.certainty({x, y, z});
                EXPECT_NEAR(coarse_value, sum, 1e-9 * std::max(1.0, sum));
            }
        }
    }
}

TEST(CertaintyGrid, DeterministicAcrossThreadCounts) {
    std::mt19937_64 rng(10);
    const GaussianScene s = random_scene(rng, 5000, unit_bounds());
    set_max_threads(1);
    const CertaintyGrid a = build_certainty_grid(s, unit_bounds(), 32);
    set_max_threads(4);
    const CertaintyGrid b = build_certainty_grid(s, unit_bounds(), 32);
    set_max_threads(0);
    ASSERT_EQ(a.occupied(), b.occupied());
    for (std::size_t k = 0; k < a.occupied(); ++k) {
        EXPECT_EQ(a.cells()[k].index, b.cells()[k].index);
        EXPECT_EQ(a.cells()[k].certainty, b.cells()[k].certainty);
    }
}

TEST(VoxelOf, HalfOpenConvention) {
    const CertaintyGrid g(unit_bounds(), 128, 1e-8, {});
    const auto lo = g.voxel_of(Vec3::Zero());
    ASSERT_TRUE(lo.has_value());
    EXPECT_EQ(*lo, (VoxelCoord{0, 0, 0}));
    EXPECT_FALSE(g.voxel_of(Vec3::Ones()).has_value());
    EXPECT_FALSE(g.voxel_of(Vec3(0.5, -1e-12, 0.5)).has_value());
    EXPECT_EQ(*g.voxel_of(Vec3::Constant(0.5)), (VoxelCoord{64, 64, 64}));
    const VoxelCoord v{3, 100, 127};
    EXPECT_EQ(g.coord(g.linear_index(v)), v);
    EXPECT_EQ(*g.voxel_of(g.voxel_center(v)), v);
}

TEST(CertaintyGrid, ConstructionErrors) {
    try {
        CertaintyGrid(unit_bounds(), 0, 1e-8, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ResolutionTooSmall);
    }
    SceneBounds flat = unit_bounds();
    flat.max_corner.z() = 0.0;
    try {
        build_certainty_grid(single(Vec3::Zero(), 1.0), flat, 8);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateBounds);
    }
}

TEST(SampleLookat, SingleVoxel) {
    const CertaintyGrid g = build_certainty_grid(single(Vec3(0.9, 0.1, 0.6), 0.7), unit_bounds(), 8);
    const Vec3 center = g.voxel_center(*g.voxel_of(Vec3(0.9, 0.1, 0.6)));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EXPECT_LT((sample_lookat(g, 0.5, seed) - center).norm(), 1e-12);
    }
}

TEST(SampleLookat, CertaintyProportionalFrequencies) {
    const CertaintyGrid g(unit_bounds(), 8, 1e-8, {{0, 3.0}, {511, 1.0}});
    const Vec3 first = g.voxel_center(std::uint64_t{0});
    int hits = 0;
    constexpr int kDraws = 100000;
    for (int i = 0; i < kDraws; ++i) hits += (sample_lookat(g, 1.0, i) - first).norm() < 1e-12 ? 1 : 0;
    EXPECT_NEAR(static_cast<double>(hits) / kDraws, 0.75, 0.01);
}

TEST(SampleLookat, CentralRegionPreferred) {
    std::mt19937_64 rng(12);
    const GaussianScene s = random_scene(rng, 400, unit_bounds());
    const CertaintyGrid g = build_certainty_grid(s, unit_bounds(), 16);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const Vec3 p = sample_lookat(g, 0.5, seed);
        EXPECT_TRUE((p.array() >= 0.25).all() && (p.array() <= 0.75).all()) << p.transpose();
    }
    // central_fraction = 1 is the unrestricted draw.
    const CertaintyGrid h = build_certainty_grid(s, unit_bounds(), 16);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        EXPECT_EQ(sample_lookat(g, 1.0, seed), sample_lookat(h, 1.0, seed));
    }
}

TEST(GridSidecar, BinaryRoundTrip) {
    std::mt19937_64 rng(13);
    const GaussianScene s = random_scene(rng, 1000, unit_bounds());
    const CertaintyGrid g = build_certainty_grid(s, unit_bounds(), 32, 1e-7);
    TempDir dir("grid_bin");
    write_grid_binary(g, dir / "grid.bin");
    const CertaintyGrid h = read_grid_binary(dir / "grid.bin");
    EXPECT_EQ(h.resolution(), 32);
    EXPECT_EQ(h.epsilon(), 1e-7);
    EXPECT_EQ(h.bounds().min_corner, g.bounds().min_corner);
    ASSERT_EQ(h.occupied(), g.occupied());
    for (std::size_t k = 0; k < g.occupied(); ++k) {
        EXPECT_EQ(h.cells()[k].index, g.cells()[k].index);
        EXPECT_EQ(h.cells()[k].certainty, g.cells()[k].certainty);
    }
}
