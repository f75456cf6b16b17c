#include "oracles.hpp"

#include "viewforge/error.hpp"
#include "viewforge/ssim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

using namespace vft;

namespace {

Image formula_image(const std::function<double(double, double, int)>& f) {
    Image img(52, 40, 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = f(x, y, c);
        }
    }
    return img;
}

} // namespace

TEST(Ssim, MatchesBruteForce) {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 20; ++k) {
        const Image a = random_image(rng, 30 + k, 25 + k / 2, k % 2 == 0 ? 3 : 1);
        Image b = a;
        std::normal_distribution<double> n(0.0, 0.05 * (k + 1));
        for (double& v : b.data) v = std::clamp(v + n(rng), 0.0, 1.0);
        EXPECT_NEAR(ssim(a, b), ssim_brute_force(a, b), 1e-10);
    }
}

// Values frozen from scikit-image structural_similarity with gaussian_weights,
// sigma 1.5, population covariance, data_range 1 on the same formula images.
TEST(Ssim, MatchesFrozenReference) {
    const Image a = formula_image([](double x, double y, int c) { return 0.5 + 0.4 * std::sin(0.3 * x + 0.7 * y + c); });
    const Image b = formula_image([](double x, double y, int c) {
        return 0.5 + 0.35 * std::sin(0.29 * x + 0.71 * y + 0.5 * c) + 0.05 * std::cos(1.3 * x * (c + 1));
    });
    Image g = a;
    for (double& v : g.data) v = std::clamp(v * 0.7 + 0.1, 0.0, 1.0);
    EXPECT_NEAR(ssim(a, b), 0.736560113771847, 1e-9);
    EXPECT_NEAR(ssim(a, g), 0.9341931290835745, 1e-9);
    EXPECT_NEAR(ssim(b, g), 0.7215398696435704, 1e-9);
}

TEST(Ssim, SymmetryAndIdentity) {
    std::mt19937_64 rng(2);
    for (int k = 0; k < 10; ++k) {
        const Image a = random_image(rng, 40, 32, 3);
        const Image b = random_image(rng, 40, 32, 3);
        EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
        EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
        EXPECT_LT(ssim(a, b), 0.5);
    }
}

TEST(Ssim, Errors) {
    const Image a(20, 20, 3);
    const Image b(20, 21, 3);
    try {
        ssim(a, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
    }
    EXPECT_THROW(free_view_loss(a, b, 0.4), Error);
    const Image tiny(8, 8, 1);
    EXPECT_THROW(ssim(tiny, tiny), Error);
}

TEST(FreeViewLoss, IdenticalIsZero) {
    std::mt19937_64 rng(3);
    const Image a = random_image(rng, 32, 24, 3);
    EXPECT_NEAR(free_view_loss(a, a, 0.4), 0.0, 1e-12);
}

TEST(FreeViewLoss, ConstantOffset) {
    std::mt19937_64 rng(4);
    Image a = random_image(rng, 32, 24, 3);
    for (double& v : a.data) v *= 0.8;
    Image b = a;
    for (double& v : b.data) v += 0.1;
    EXPECT_NEAR(mean_abs_diff(a, b), 0.1, 1e-12);
    const double w = 0.35;
    const double loss = free_view_loss(a, b, w);
    EXPECT_GE(loss, 0.1 * w - 1e-12);
    EXPECT_NEAR(loss, w * (0.1 + 1.0 - ssim(a, b)), 1e-12);
}

TEST(FreeViewLoss, NonNegative) {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        const Image a = random_image(rng, 24, 24, 3);
        const Image b = random_image(rng, 24, 24, 3);
        EXPECT_GE(free_view_loss(a, b, 0.3), 0.0);
        EXPECT_GT(free_view_loss(a, b, 0.3), 0.0);
    }
    EXPECT_THROW(free_view_loss(Image(24, 24, 3), Image(24, 24, 3), -0.1), Error);
}
