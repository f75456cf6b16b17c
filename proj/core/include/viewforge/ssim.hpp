#pragma once

#include "viewforge/image.hpp"

namespace viewforge {

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double data_range = 1.0;
};

/// Mean SSIM over every full window position (no padding), averaged across
/// channels. Gaussian-weighted local statistics with population covariance.
/// Throws ShapeMismatch for differing shapes, InvalidArgument when the image
/// is smaller than the window.
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});

/// Mean absolute difference over all samples.
double mean_abs_diff(const Image& a, const Image& b);

/// weight * (L1 + 1 - SSIM).
double free_view_loss(const Image& rendered, const Image& pseudo_gt, double weight);

} // namespace viewforge
