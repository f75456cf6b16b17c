#include "viewforge/ssim.hpp"

#include "viewforge/error.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace viewforge {

namespace {

void check_shapes(const Image& a, const Image& b) {
    if (!a.same_shape(b)) {
        throw Error(ErrorCode::ShapeMismatch, std::to_string(a.width) + "x" + std::to_string(a.height) + "x" +
                                                  std::to_string(a.channels) + " vs " + std::to_string(b.width) + "x" +
                                                  std::to_string(b.height) + "x" + std::to_string(b.channels));
    }
}

// Valid-mode separable filter of one channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h, const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += k[i] * plane[static_cast<std::size_t>(y) * w + x + i];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    }
    return out;
}

} // namespace

double ssim(const Image& a, const Image& b, const SsimOptions& o) {
    check_shapes(a, b);
    if (o.window < 1 || o.window % 2 == 0) throw Error(ErrorCode::InvalidArgument, "SSIM window must be odd");
    if (a.width < o.window || a.height < o.window) {
        throw Error(ErrorCode::InvalidArgument, "image smaller than the SSIM window");
    }
    const int r = o.window / 2;
    std::vector<double> kernel(o.window);
    double ksum = 0.0;
    for (int i = -r; i <= r; ++i) ksum += kernel[i + r] = std::exp(-0.5 * i * i / (o.sigma * o.sigma));
    for (double& v : kernel) v /= ksum;

    const double c1 = (o.k1 * o.data_range) * (o.k1 * o.data_range);
    const double c2 = (o.k2 * o.data_range) * (o.k2 * o.data_range);
    const std::size_t n = a.pixels();
    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (std::size_t p = 0; p < n; ++p) {
            x[p] = a.data[p * a.channels + c];
            y[p] = b.data[p * b.channels + c];
            xx[p] = x[p] * x[p];
            yy[p] = y[p] * y[p];
            xy[p] = x[p] * y[p];
        }
        const auto mx = filter_valid(x, a.width, a.height, kernel);
        const auto my = filter_valid(y, a.width, a.height, kernel);
        const auto sxx = filter_valid(xx, a.width, a.height, kernel);
        const auto syy = filter_valid(yy, a.width, a.height, kernel);
        const auto sxy = filter_valid(xy, a.width, a.height, kernel);
        double acc = 0.0;
        for (std::size_t p = 0; p < mx.size(); ++p) {
            const double vx = sxx[p] - mx[p] * mx[p];
            const double vy = syy[p] - my[p] * my[p];
            const double cov = sxy[p] - mx[p] * my[p];
            acc += ((2.0 * mx[p] * my[p] + c1) * (2.0 * cov + c2)) /
                   ((mx[p] * mx[p] + my[p] * my[p] + c1) * (vx + vy + c2));
        }
        total += acc / static_cast<double>(mx.size());
    }
    return total / a.channels;
}

double mean_abs_diff(const Image& a, const Image& b) {
    check_shapes(a, b);
    if (a.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += std::abs(a.data[i] - b.data[i]);
    return acc / static_cast<double>(a.data.size());
}

double free_view_loss(const Image& rendered, const Image& pseudo_gt, double weight) {
    check_shapes(rendered, pseudo_gt);
    if (!(weight >= 0.0)) throw Error(ErrorCode::InvalidArgument, "loss weight must be non-negative");
    return weight * (mean_abs_diff(rendered, pseudo_gt) + 1.0 - ssim(rendered, pseudo_gt));
}

} // namespace viewforge
