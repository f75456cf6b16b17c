#pragma once

#include "viewforge/image.hpp"
#include "viewforge/renderer.hpp"

#include <functional>
#include <memory>

namespace viewforge {

/// Fraction of pixels whose accumulated alpha is below `alpha_floor`.
double black_pixel_ratio(const RenderOutput& out, double alpha_floor = 0.05);

/// (P_hi - P_lo) of the valid depths inside the central `crop` window,
/// divided by `scene_diag`. Percentiles interpolate linearly between order
/// statistics; returns 0 when fewer than 1% of the crop pixels hold depth.
double depth_range_score(const RenderOutput& out, double crop, double lo_percentile, double hi_percentile,
                         double scene_diag);

/// No-reference image quality: lower is better, range [0,1].
class QualityScorer {
public:
    virtual ~QualityScorer() = default;
    virtual double score(const Image& rgb) const = 0;
};

/// Built-in scorer: 1 - (0.5 * detail + 0.5 * contrast), each term
/// saturating as 1 - exp(-x / scale). Detail is the mean forward-difference
/// gradient magnitude of luma, contrast its standard deviation. The scales
/// are set for 256x192 renders.
class HeuristicQualityScorer final : public QualityScorer {
public:
    explicit HeuristicQualityScorer(double detail_scale = 3e-3, double contrast_scale = 0.06)
        : detail_scale_(detail_scale), contrast_scale_(contrast_scale) {}
    double score(const Image& rgb) const override;

    static double mean_gradient(const Image& gray);
    static double luma_stddev(const Image& gray);

private:
    double detail_scale_;
    double contrast_scale_;
};

double quality_score(const Image& rgb);

struct QualityThresholds {
    double quality_max = 0.5;
    double depth_range_min = 0.1;
    double black_ratio_max = 0.15;
    double alpha_floor = 0.05;
    double depth_crop = 0.7;
    double depth_lo_percentile = 5.0;
    double depth_hi_percentile = 95.0;
};

struct QualityReport {
    double black_pixel_ratio = 1.0;
    double depth_range_score = 0.0;
    double quality_score = 1.0;
    bool passed = false;
};

QualityReport assess_quality(const RenderOutput& out, const QualityScorer& scorer, const QualityThresholds& thresholds,
                             double scene_diag);

} // namespace viewforge
