#include "viewforge/selector.hpp"

#include "json_util.hpp"
#include "viewforge/error.hpp"
#include "viewforge/parallel.hpp"
#include "viewforge/renderer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace viewforge {

void SelectorConfig::validate() const {
    if (!(nms_wiou_threshold > 0.0 && nms_wiou_threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "nms_wiou_threshold must lie in (0, 1]");
    }
    if (nms_target < 0 || final_target < 0) throw Error(ErrorCode::InvalidArgument, "targets must be >= 0");
    for (std::size_t i = 0; i < rectify_steps.size(); ++i) {
        if (!(rectify_steps[i] > 0.0 && rectify_steps[i] < 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "rectify steps must lie in (0, 1)");
        }
        if (i > 0 && !(rectify_steps[i] < rectify_steps[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "rectify steps must be strictly decreasing");
        }
    }
    if (!(occupancy_reject_percentile >= 0.0 && occupancy_reject_percentile <= 100.0)) {
        throw Error(ErrorCode::InvalidArgument, "occupancy_reject_percentile must lie in [0, 100]");
    }
    if (render_width < 1 || render_height < 1) throw Error(ErrorCode::InvalidArgument, "render size must be positive");
}

QualityThresholds SelectorConfig::thresholds() const {
    QualityThresholds t;
    t.quality_max = quality_max;
    t.depth_range_min = depth_range_min;
    t.black_ratio_max = black_ratio_max;
    t.alpha_floor = alpha_floor;
    return t;
}

namespace {

constexpr std::array<std::string_view, 7> kStatusNames = {
    "selected",
    "rejected_feasibility",
    "rejected_nms",
    "rejected_quality",
    "rectified_then_selected",
    "rectified_then_rejected",
    "rejected_final_quota",
};

} // namespace

std::string_view to_string(FreeViewStatus status) { return kStatusNames[static_cast<std::size_t>(status)]; }

FreeViewStatus free_view_status_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
        if (kStatusNames[i] == s) return static_cast<FreeViewStatus>(i);
    }
    throw Error(ErrorCode::MalformedFile, "unknown free-view status '" + std::string(s) + "'");
}

FeasibilitySplit feasibility_filter(const std::vector<CandidatePose>& pool, const CertaintyGrid& grid,
                                    const SceneBounds& bounds, const SelectorConfig& config) {
    double limit = std::numeric_limits<double>::infinity();
    if (!grid.empty()) {
        std::vector<double> values;
        values.reserve(grid.occupied());
        for (const auto& c : grid.cells()) values.push_back(c.certainty);
        std::sort(values.begin(), values.end());
        const double pos = config.occupancy_reject_percentile / 100.0 * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        limit = values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
    }
    FeasibilitySplit split;
    for (const auto& c : pool) {
        const Vec3 center = c.pose.center();
        bool ok = bounds.contains(center);
        if (ok) {
            if (const auto v = grid.voxel_of(center)) ok = !(grid.certainty(*v) > limit);
        }
        (ok ? split.feasible : split.rejected).push_back(c);
    }
    return split;
}

std::vector<int> nms_select(const ViewGraph& graph, std::span<const int> training_ids,
                            std::span<const int> candidate_ids, const SelectorConfig& config) {
    std::vector<int> order(candidate_ids.begin(), candidate_ids.end());
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double sa = graph.node(a).score;
        const double sb = graph.node(b).score;
        return sa != sb ? sa > sb : a < b;
    });
    std::vector<int> selected(training_ids.begin(), training_ids.end());
    std::vector<int> accepted;
    for (const int c : order) {
        if (static_cast<int>(accepted.size()) >= config.nms_target) break;
        const bool redundant = std::any_of(selected.begin(), selected.end(), [&](int s) {
            return graph.wiou(c, s) >= config.nms_wiou_threshold;
        });
        if (redundant) continue;
        selected.push_back(c);
        accepted.push_back(c);
    }
    return accepted;
}

CameraPose rectify_pose(const CameraPose& candidate, const CameraPose& anchor, double step) {
    if (!(step > 0.0 && step <= 1.0)) throw Error(ErrorCode::InvalidArgument, "rectify step must lie in (0, 1]");
    if (step == 1.0) return candidate;
    CameraPose out = candidate;
    out.rotation = anchor.rotation.slerp(step, candidate.rotation).normalized();
    const Vec3 a = anchor.center();
    out.set_center(a + step * (candidate.center() - a));
    return out;
}

namespace {

const CameraPose& nearest_training(const std::vector<CameraPose>& training, const Vec3& center) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < training.size(); ++i) {
        const double d = (training[i].center() - center).squaredNorm();
        if (d < best_d || (d == best_d && training[i].id < training[best].id)) {
            best = i;
            best_d = d;
        }
    }
    return training[best];
}

} // namespace

std::vector<FreeViewRecord> gate_and_rectify(const std::vector<CandidatePose>& accepted, const GateInputs& in,
                                             const SelectorConfig& config) {
    config.validate();
    if (in.training.empty()) throw Error(ErrorCode::InvalidArgument, "gating needs training poses");
    const SplatRenderer renderer(in.scene, config.render_max_count);
    const QualityThresholds thresholds = config.thresholds();
    const double diag = in.grid.bounds().diagonal();
    std::vector<int> training_ids;
    for (const auto& t : in.training) training_ids.push_back(t.id);

    auto gate = [&](const CameraPose& pose) {
        const RenderOutput out = renderer.render(pose.resized(config.render_width, config.render_height));
        return assess_quality(out, in.scorer, thresholds, diag);
    };

    std::vector<FreeViewRecord> records(accepted.size());
    parallel_for_dynamic(0, accepted.size(), [&](std::size_t k) {
        FreeViewRecord& r = records[k];
        r.candidate = accepted[k];
        r.final_pose = accepted[k].pose;
        r.quality = gate(r.final_pose);
        if (r.quality->passed) {
            try {
                r.reference_id = in.graph.contains(r.final_pose.id)
                                     ? select_reference(in.graph, r.final_pose.id, training_ids)
                                     : select_reference(in.graph, compute_visibility(r.final_pose, in.grid), training_ids);
                r.status = FreeViewStatus::selected;
                return;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoReferenceAvailable) throw;
            }
        }
        if (config.rectify_steps.empty()) {
            r.status = FreeViewStatus::rejected_quality;
            return;
        }
        const CameraPose& anchor = nearest_training(in.training, accepted[k].pose.center());
        r.status = FreeViewStatus::rectified_then_rejected;
        for (const double step : config.rectify_steps) {
            const CameraPose moved = rectify_pose(accepted[k].pose, anchor, step);
            const QualityReport report = gate(moved);
            r.rectify_history.push_back({step, report});
            if (!report.passed) continue;
            try {
                r.reference_id = select_reference(in.graph, compute_visibility(moved, in.grid), training_ids);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::NoReferenceAvailable) throw;
                continue;
            }
            r.final_pose = moved;
            r.quality = report;
            r.status = FreeViewStatus::rectified_then_selected;
            break;
        }
    });

    // Final quota: keep the best quality scores among the survivors.
    std::vector<std::size_t> survivors;
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (records[k].is_selected()) survivors.push_back(k);
    }
    std::stable_sort(survivors.begin(), survivors.end(), [&](std::size_t a, std::size_t b) {
        const double qa = records[a].quality->quality_score;
        const double qb = records[b].quality->quality_score;
        return qa != qb ? qa < qb : records[a].candidate.pose.id < records[b].candidate.pose.id;
    });
    for (std::size_t rank = static_cast<std::size_t>(config.final_target); rank < survivors.size(); ++rank) {
        records[survivors[rank]].status = FreeViewStatus::rejected_final_quota;
    }
    return records;
}

SelectionResult run_selection(const std::vector<CandidatePose>& pool, const GateInputs& in,
                              const SelectorConfig& config) {
    config.validate();
    SelectionResult result;
    result.funnel.pool = pool.size();

    const FeasibilitySplit split = feasibility_filter(pool, in.grid, in.grid.bounds(), config);
    result.funnel.feasible = split.feasible.size();

    std::vector<int> training_ids;
    for (const auto& t : in.training) training_ids.push_back(t.id);
    std::vector<int> feasible_ids;
    for (const auto& c : split.feasible) feasible_ids.push_back(c.pose.id);
    const std::vector<int> accepted_ids = nms_select(in.graph, training_ids, feasible_ids, config);
    result.funnel.nms = accepted_ids.size();

    std::unordered_map<int, std::size_t> pool_index;
    for (std::size_t i = 0; i < pool.size(); ++i) pool_index[pool[i].pose.id] = i;
    std::vector<CandidatePose> accepted;
    for (const int id : accepted_ids) accepted.push_back(pool[pool_index.at(id)]);
    std::vector<FreeViewRecord> gated = gate_and_rectify(accepted, in, config);

    result.records.resize(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        result.records[i].candidate = pool[i];
        result.records[i].final_pose = pool[i].pose;
        result.records[i].status = FreeViewStatus::rejected_nms;
    }
    for (const auto& c : split.rejected) result.records[pool_index.at(c.pose.id)].status = FreeViewStatus::rejected_feasibility;
    for (auto& r : gated) {
        if (r.is_selected() || r.status == FreeViewStatus::rejected_final_quota) ++result.funnel.gated;
        if (r.is_selected()) ++result.funnel.final_count;
        result.records[pool_index.at(r.candidate.pose.id)] = std::move(r);
    }
    return result;
}

namespace {

using detail::json;

json report_to_json(const QualityReport& q) {
    return {{"black_pixel_ratio", q.black_pixel_ratio},
            {"depth_range_score", q.depth_range_score},
            {"quality_score", q.quality_score},
            {"passed", q.passed}};
}

QualityReport report_from_json(const json& j) {
    QualityReport q;
    q.black_pixel_ratio = j.at("black_pixel_ratio").get<double>();
    q.depth_range_score = j.at("depth_range_score").get<double>();
    q.quality_score = j.at("quality_score").get<double>();
    q.passed = j.at("passed").get<bool>();
    return q;
}

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

} // namespace

void write_freeviews_json(const std::vector<FreeViewRecord>& records, const std::filesystem::path& path) {
    json doc = json::array();
    for (const auto& r : records) {
        json history = json::array();
        for (const auto& h : r.rectify_history) history.push_back({{"step", h.step}, {"quality", report_to_json(h.report)}});
        json candidate = detail::pose_to_json(r.candidate.pose);
        candidate["mode"] = std::string(to_string(r.candidate.mode));
        candidate["anchor_id"] = r.candidate.anchor_id;
        candidate["frame_index"] = r.candidate.frame_index;
        candidate["lookat"] = r.candidate.lookat ? detail::vec_to_json(*r.candidate.lookat) : json(nullptr);
        candidate["jittered"] = r.candidate.jittered;
        doc.push_back({
            {"id", r.candidate.pose.id},
            {"status", std::string(to_string(r.status))},
            {"candidate", std::move(candidate)},
            {"quality", r.quality ? report_to_json(*r.quality) : json(nullptr)},
            {"rectify_history", std::move(history)},
            {"reference_id", r.reference_id ? json(*r.reference_id) : json(nullptr)},
            {"final_pose", detail::pose_to_json(r.final_pose)},
            {"color_path", optional_string(r.color_path)},
            {"depth_path", optional_string(r.depth_path)},
        });
    }
    detail::write_json_file(doc, path);
}

std::vector<FreeViewRecord> read_freeviews_json(const std::filesystem::path& path) {
    const json doc = detail::read_json_file(path);
    std::vector<FreeViewRecord> records;
    try {
        for (const auto& j : doc) {
            FreeViewRecord r;
            const auto& c = j.at("candidate");
            r.candidate.pose = detail::pose_from_json(c);
            r.candidate.mode = trajectory_mode_from_string(c.at("mode").get<std::string>());
            r.candidate.anchor_id = c.at("anchor_id").get<int>();
            r.candidate.frame_index = c.at("frame_index").get<int>();
            if (!c.at("lookat").is_null()) r.candidate.lookat = detail::vec_from_json(c.at("lookat"));
            r.candidate.jittered = c.value("jittered", false);
            r.status = free_view_status_from_string(j.at("status").get<std::string>());
            if (!j.at("quality").is_null()) r.quality = report_from_json(j.at("quality"));
            for (const auto& h : j.at("rectify_history")) {
                r.rectify_history.push_back({h.at("step").get<double>(), report_from_json(h.at("quality"))});
            }
            if (!j.at("reference_id").is_null()) r.reference_id = j.at("reference_id").get<int>();
            r.final_pose = detail::pose_from_json(j.at("final_pose"));
            if (!j.at("color_path").is_null()) r.color_path = j.at("color_path").get<std::string>();
            if (!j.at("depth_path").is_null()) r.depth_path = j.at("depth_path").get<std::string>();
            records.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
    }
    return records;
}

} // namespace viewforge
