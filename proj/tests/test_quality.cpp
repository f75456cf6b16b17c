#include "oracles.hpp"

#include "viewforge/quality.hpp"

#include <gtest/gtest.h>

using namespace vft;

namespace {

RenderOutput blank(int w, int h) {
    RenderOutput out;
    out.color = Image(w, h, 3);
    out.depth = Image(w, h, 1);
    out.alpha = Image(w, h, 1);
    return out;
}

Image checkerboard(int w, int h, int cell) {
    Image img(w, h, 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = ((x / cell + y / cell) % 2 == 0) ? 0.9 : 0.1;
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
        }
    }
    return img;
}

Image box_blur(const Image& img, int size) {
    Image out(img.width, img.height, img.channels);
    const int r = size / 2;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                double sum = 0.0;
                int n = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    for (int dx = -r; dx <= r; ++dx) {
                        const int xx = std::clamp(x + dx, 0, img.width - 1);
                        const int yy = std::clamp(y + dy, 0, img.height - 1);
                        sum += img.at(xx, yy, c);
                        ++n;
                    }
                }
                out.at(x, y, c) = sum / n;
            }
        }
    }
    return out;
}

} // namespace

TEST(BlackPixelRatio, Extremes) {
    RenderOutput out = blank(16, 8);
    EXPECT_DOUBLE_EQ(black_pixel_ratio(out), 1.0);
    for (double& a : out.alpha.data) a = 1.0;
    EXPECT_DOUBLE_EQ(black_pixel_ratio(out), 0.0);
}

TEST(BlackPixelRatio, HalfCovered) {
    RenderOutput out = blank(17, 9);
    std::size_t covered = 0;
    for (int y = 0; y < 9; ++y) {
        for (int x = 0; x < 17; ++x) {
            if (x < 8 || (x == 8 && y < 5)) {
                out.alpha.at(x, y) = 0.3;
                ++covered;
            }
        }
    }
    const double expect = 1.0 - static_cast<double>(covered) / (17 * 9);
    EXPECT_NEAR(black_pixel_ratio(out), expect, 1e-12);
    EXPECT_NEAR(black_pixel_ratio(out), 0.5, 1.0 / (17 * 9));
    // Pixels below the floor count as black.
    out.alpha.at(0, 0) = 0.04;
    EXPECT_NEAR(black_pixel_ratio(out), expect + 1.0 / (17 * 9), 1e-12);
}

TEST(DepthRange, ConstantPlaneIsZero) {
    RenderOutput out = blank(40, 30);
    for (double& a : out.alpha.data) a = 1.0;
    for (double& d : out.depth.data) d = 3.0;
    EXPECT_DOUBLE_EQ(depth_range_score(out, 0.7, 5, 95, 10.0), 0.0);
}

TEST(DepthRange, UniformRamp) {
    const int w = 400;
    const int h = 300;
    RenderOutput out = blank(w, h);
    const double diag = 7.0;
    for (double& a : out.alpha.data) a = 1.0;
    // Depth uniform over [0, diag] inside the central crop.
    const int cw = static_cast<int>(std::lround(w * 0.7));
    const int x0 = (w - cw) / 2;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out.depth.at(x, y) = diag * std::clamp((x - x0 + 0.5) / cw, 0.0, 1.0);
    }
    EXPECT_NEAR(depth_range_score(out, 0.7, 5, 95, diag), 0.9, 0.02);
}

TEST(DepthRange, EmptyCropIsZero) {
    RenderOutput out = blank(40, 30);
    for (double& d : out.depth.data) d = 5.0;
    EXPECT_DOUBLE_EQ(depth_range_score(out, 0.7, 5, 95, 10.0), 0.0);
}

TEST(QualityScore, ConstantImageScoresHigh) {
    const Image gray(64, 48, 3, 0.5);
    EXPECT_GE(quality_score(gray), 0.9);
}

TEST(QualityScore, DeterministicAndRanged) {
    std::mt19937_64 rng(40);
    const Image img = random_image(rng, 64, 48, 3);
    const Image copy = img;
    EXPECT_EQ(quality_score(img), quality_score(copy));
    EXPECT_GE(quality_score(img), 0.0);
    EXPECT_LE(quality_score(img), 1.0);
}

TEST(QualityScore, BlurRaisesScore) {
    const Image sharp = checkerboard(128, 96, 8);
    const Image blurred = box_blur(sharp, 9);
    EXPECT_LT(quality_score(sharp), quality_score(blurred));
}

TEST(AssessQuality, AllThresholdsMustHold) {
    RenderOutput out = blank(64, 48);
    out.color = checkerboard(64, 48, 4);
    for (double& a : out.alpha.data) a = 1.0;
    for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 64; ++x) out.depth.at(x, y) = 1.0 + 0.1 * x;
    }
    const HeuristicQualityScorer scorer;
    const QualityThresholds t;
    const QualityReport ok = assess_quality(out, scorer, t, 6.0);
    EXPECT_LT(ok.quality_score, t.quality_max);
    EXPECT_GT(ok.depth_range_score, t.depth_range_min);
    EXPECT_TRUE(ok.passed);

    RenderOutput holes = out;
    for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 12; ++x) holes.alpha.at(x, y) = 0.0;
    }
    const QualityReport dark = assess_quality(holes, scorer, t, 6.0);
    EXPECT_GT(dark.black_pixel_ratio, t.black_ratio_max);
    EXPECT_FALSE(dark.passed);

    RenderOutput flat = out;
    for (double& d : flat.depth.data) d = 2.0;
    EXPECT_FALSE(assess_quality(flat, scorer, t, 6.0).passed);
}
