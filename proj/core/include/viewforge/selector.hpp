#pragma once

#include "viewforge/certainty_grid.hpp"
#include "viewforge/quality.hpp"
#include "viewforge/trajectory.hpp"
#include "viewforge/view_graph.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace viewforge {

struct SelectorConfig {
    double nms_wiou_threshold = 0.7;
    int nms_target = 500;
    double quality_max = 0.5;
    double depth_range_min = 0.1;
    double black_ratio_max = 0.15;
    std::vector<double> rectify_steps = {0.7, 0.5, 0.3};
    int final_target = 100;
    double occupancy_reject_percentile = 90.0;
    double alpha_floor = 0.05;
    int render_width = 256;
    int render_height = 192;
    /// Primitive budget per gating render (0 = all).
    std::size_t render_max_count = 0;

    void validate() const;
    QualityThresholds thresholds() const;
};

enum class FreeViewStatus {
    selected,
    rejected_feasibility,
    rejected_nms,
    rejected_quality,
    rectified_then_selected,
    rectified_then_rejected,
    /// Passed gating but fell outside the final quality-ranked quota.
    rejected_final_quota,
};

std::string_view to_string(FreeViewStatus status);
FreeViewStatus free_view_status_from_string(std::string_view s);

struct RectifyAttempt {
    double step = 1.0;
    QualityReport report;
};

struct FreeViewRecord {
    CandidatePose candidate;
    FreeViewStatus status = FreeViewStatus::rejected_nms;
    std::optional<QualityReport> quality;
    std::vector<RectifyAttempt> rectify_history;
    std::optional<int> reference_id;
    /// Pose after rectification (equals the candidate pose when none ran).
    CameraPose final_pose;
    std::optional<std::string> color_path;
    std::optional<std::string> depth_path;

    bool is_selected() const {
        return status == FreeViewStatus::selected || status == FreeViewStatus::rectified_then_selected;
    }
};

struct FeasibilitySplit {
    std::vector<CandidatePose> feasible;
    std::vector<CandidatePose> rejected;
};

/// Rejects poses whose center leaves the bounds or sits in a voxel whose
/// certainty exceeds the configured percentile of occupied-voxel values.
FeasibilitySplit feasibility_filter(const std::vector<CandidatePose>& pool, const CertaintyGrid& grid,
                                    const SceneBounds& bounds, const SelectorConfig& config);

/// Greedy suppression: candidates in descending score (ties by lower id)
/// join the selected set, seeded with every training view, when their exact
/// WIoU against all members stays below the threshold. Stops at nms_target.
std::vector<int> nms_select(const ViewGraph& graph, std::span<const int> training_ids,
                            std::span<const int> candidate_ids, const SelectorConfig& config);

/// Camera center moved to anchor + step * (candidate - anchor); rotation
/// slerped from the anchor toward the candidate by `step`. Intrinsics follow
/// the candidate.
CameraPose rectify_pose(const CameraPose& candidate, const CameraPose& anchor, double step);

struct GateInputs {
    const GaussianScene& scene;
    const CertaintyGrid& grid;
    const ViewGraph& graph;
    const std::vector<CameraPose>& training;
    const QualityScorer& scorer;
};

/// Renders and gates every accepted candidate, rectifying failures toward the
/// nearest training camera, assigns references, then keeps the final_target
/// best quality scores among the survivors.
std::vector<FreeViewRecord> gate_and_rectify(const std::vector<CandidatePose>& accepted, const GateInputs& inputs,
                                             const SelectorConfig& config);

struct SelectionFunnel {
    std::size_t pool = 0;
    std::size_t feasible = 0;
    std::size_t nms = 0;
    std::size_t gated = 0;
    std::size_t final_count = 0;
};

struct SelectionResult {
    std::vector<FreeViewRecord> records;  ///< one per pool candidate, pool order
    SelectionFunnel funnel;
};

/// Full selection: feasibility, NMS, gating with rectification, final quota.
SelectionResult run_selection(const std::vector<CandidatePose>& pool, const GateInputs& inputs,
                              const SelectorConfig& config);

void write_freeviews_json(const std::vector<FreeViewRecord>& records, const std::filesystem::path& path);
std::vector<FreeViewRecord> read_freeviews_json(const std::filesystem::path& path);

} // namespace viewforge
