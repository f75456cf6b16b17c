#include "viewforge/quality.hpp"

#include "viewforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace viewforge {

double black_pixel_ratio(const RenderOutput& out, double alpha_floor) {
    const Image& a = out.alpha;
    if (a.empty()) return 1.0;
    std::size_t black = 0;
    for (const double v : a.data) black += v < alpha_floor ? 1 : 0;
    return static_cast<double>(black) / static_cast<double>(a.pixels());
}

namespace {

double percentile(const std::vector<double>& sorted, double p) {
    const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

} // namespace

double depth_range_score(const RenderOutput& out, double crop, double lo_percentile, double hi_percentile,
                         double scene_diag) {
    if (!(crop > 0.0 && crop <= 1.0) || !(lo_percentile >= 0.0 && lo_percentile < hi_percentile && hi_percentile <= 100.0)) {
        throw Error(ErrorCode::InvalidArgument, "depth_range_score needs 0 < crop <= 1 and 0 <= lo < hi <= 100");
    }
    const int w = out.depth.width;
    const int h = out.depth.height;
    const int cw = std::max(1, static_cast<int>(std::lround(w * crop)));
    const int ch = std::max(1, static_cast<int>(std::lround(h * crop)));
    const int x0 = (w - cw) / 2;
    const int y0 = (h - ch) / 2;
    std::vector<double> depths;
    depths.reserve(static_cast<std::size_t>(cw) * ch);
    for (int y = y0; y < y0 + ch; ++y) {
        for (int x = x0; x < x0 + cw; ++x) {
            if (out.alpha.at(x, y) > 1e-6) depths.push_back(out.depth.at(x, y));
        }
    }
    const double total = static_cast<double>(cw) * ch;
    if (depths.empty() || static_cast<double>(depths.size()) < 0.01 * total) return 0.0;
    std::sort(depths.begin(), depths.end());
    return (percentile(depths, hi_percentile) - percentile(depths, lo_percentile)) / scene_diag;
}

double HeuristicQualityScorer::mean_gradient(const Image& gray) {
    if (gray.width < 2 || gray.height < 2) return 0.0;
    double sum = 0.0;
    for (int y = 0; y + 1 < gray.height; ++y) {
        for (int x = 0; x + 1 < gray.width; ++x) {
            const double dx = gray.at(x + 1, y) - gray.at(x, y);
            const double dy = gray.at(x, y + 1) - gray.at(x, y);
            sum += std::sqrt(dx * dx + dy * dy);
        }
    }
    return sum / (static_cast<double>(gray.width - 1) * (gray.height - 1));
}

double HeuristicQualityScorer::luma_stddev(const Image& gray) {
    double mean = 0.0;
    for (const double v : gray.data) mean += v;
    mean /= static_cast<double>(gray.data.size());
    double var = 0.0;
    for (const double v : gray.data) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(gray.data.size()));
}

double HeuristicQualityScorer::score(const Image& rgb) const {
    if (rgb.empty()) throw Error(ErrorCode::InvalidArgument, "quality_score needs a non-empty image");
    const Image gray = to_gray(rgb);
    const double detail = 1.0 - std::exp(-mean_gradient(gray) / detail_scale_);
    const double contrast = 1.0 - std::exp(-luma_stddev(gray) / contrast_scale_);
    return 1.0 - std::clamp(0.5 * detail + 0.5 * contrast, 0.0, 1.0);
}

double quality_score(const Image& rgb) { return HeuristicQualityScorer().score(rgb); }

QualityReport assess_quality(const RenderOutput& out, const QualityScorer& scorer, const QualityThresholds& t,
                             double scene_diag) {
    QualityReport r;
    r.black_pixel_ratio = black_pixel_ratio(out, t.alpha_floor);
    r.depth_range_score = depth_range_score(out, t.depth_crop, t.depth_lo_percentile, t.depth_hi_percentile, scene_diag);
    r.quality_score = scorer.score(out.color);
    r.passed = r.quality_score < t.quality_max && r.depth_range_score > t.depth_range_min &&
               r.black_pixel_ratio < t.black_ratio_max;
    return r;
}

} // namespace viewforge
