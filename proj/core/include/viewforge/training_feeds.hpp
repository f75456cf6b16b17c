#pragma once

#include "viewforge/certainty_grid.hpp"
#include "viewforge/selector.hpp"
#include "viewforge/view_graph.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace viewforge {

struct IntRange {
    int lo = 0;
    int hi = 0;
};

struct CurriculumConfig {
    int inputs_per_batch = 4;
    int targets_per_batch = 2;
    int warmup_iters = 3000;
    int total_iters = 20000;
    IntRange frame_dist_warm{10, 20};
    IntRange frame_dist_full{15, 40};
    double graph_probability = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
    int batch_size() const noexcept { return inputs_per_batch + targets_per_batch; }
    /// Frame-distance bounds at `iteration`, linear from warm to full over warmup_iters.
    IntRange frame_distance_at(int iteration) const;
};

enum class BatchSource { graph, frame_distance };
std::string_view to_string(BatchSource source);

struct CurriculumBatch {
    int iteration = 0;
    std::vector<int> input_ids;
    std::vector<int> target_ids;
    BatchSource source = BatchSource::graph;
};

/// Draws one batch. Graph mode is chosen with probability graph_probability.
/// `sequence` is the ordered capture (frame index = position).
CurriculumBatch sample_batch(int iteration, const ViewGraph& graph, std::span<const int> sequence,
                             const CurriculumConfig& config, std::mt19937_64& rng);

/// Graph-mode draw. Warm-up starts at the node with the largest incident WIoU
/// sum and takes its strongest neighbors; afterwards the start is uniform and
/// neighbors are drawn with weight max(1 - WIoU, 0.05). Only nodes whose
/// stored degree reaches batch_size - 1 can start a batch.
CurriculumBatch sample_graph_batch(int iteration, const ViewGraph& graph, const CurriculumConfig& config,
                                   std::mt19937_64& rng);

/// Frame-distance draw: inputs packed into a window, targets beyond a gap, so
/// every input/target index distance lies in frame_distance_at(iteration).
CurriculumBatch sample_frame_batch(int iteration, std::span<const int> sequence, const CurriculumConfig& config,
                                   std::mt19937_64& rng);

/// Owns the RNG; one per consumer thread.
class CurriculumSampler {
public:
    CurriculumSampler(const ViewGraph& graph, std::vector<int> sequence, CurriculumConfig config);
    CurriculumBatch next(int iteration);

private:
    const ViewGraph& graph_;
    std::vector<int> sequence_;
    CurriculumConfig config_;
    std::mt19937_64 rng_;
};

struct PseudoGtConfig {
    int interval = 3000;
    int per_event = 5;
    double weight_lo = 0.3;
    double weight_hi = 0.5;
    int total_iters = 20000;
    double quality_max = 0.5;

    void validate() const;
    /// weight_hi - (weight_hi - weight_lo) * clamp(quality / quality_max, 0, 1).
    double weight_for(double quality_score) const;
};

struct PseudoGtEvent {
    int iteration = 0;
    std::vector<int> freeview_ids;
    std::vector<double> weights;
};

struct PseudoGtSchedule {
    std::vector<PseudoGtEvent> events;
};

struct PseudoGtCandidate {
    int id = 0;
    double overlap = 0.0;  ///< max WIoU against the training views
    double quality_score = 0.0;
};

/// Events at interval, 2*interval, ... (<= total_iters), each taking the
/// per_event unscheduled candidates of lowest overlap (ties by lower id).
PseudoGtSchedule build_pseudo_gt_schedule(std::vector<PseudoGtCandidate> candidates, const PseudoGtConfig& config);

/// Convenience over selector output: only selected records take part. With a
/// grid, rectified views are scored from their final pose; otherwise the
/// graph node of the candidate is used.
PseudoGtSchedule build_pseudo_gt_schedule(const ViewGraph& graph, std::span<const int> training_ids,
                                          const std::vector<FreeViewRecord>& records, const PseudoGtConfig& config,
                                          const CertaintyGrid* grid = nullptr);

void write_batches_jsonl(const std::vector<CurriculumBatch>& batches, const std::filesystem::path& path);
void write_schedule_json(const PseudoGtSchedule& schedule, const PseudoGtConfig& config,
                         const std::filesystem::path& path);
PseudoGtSchedule read_schedule_json(const std::filesystem::path& path);

} // namespace viewforge
