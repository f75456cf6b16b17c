#include "viewforge/training_feeds.hpp"

#include "json_util.hpp"
#include "viewforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace viewforge {

void CurriculumConfig::validate() const {
    if (inputs_per_batch < 1 || targets_per_batch < 1) {
        throw Error(ErrorCode::InvalidArgument, "batches need at least one input and one target");
    }
    if (warmup_iters < 0 || total_iters < 0 || warmup_iters > total_iters) {
        throw Error(ErrorCode::InvalidArgument, "need 0 <= warmup_iters <= total_iters");
    }
    for (const IntRange& r : {frame_dist_warm, frame_dist_full}) {
        if (r.lo < 1 || r.hi < r.lo) throw Error(ErrorCode::InvalidArgument, "frame distance ranges need 1 <= lo <= hi");
    }
    if (!(graph_probability >= 0.0 && graph_probability <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "graph_probability must lie in [0, 1]");
    }
}

IntRange CurriculumConfig::frame_distance_at(int iteration) const {
    const double t =
        warmup_iters > 0 ? std::clamp(static_cast<double>(iteration) / warmup_iters, 0.0, 1.0) : 1.0;
    const auto lerp = [t](int a, int b) { return static_cast<int>(std::lround(a + t * (b - a))); };
    return {lerp(frame_dist_warm.lo, frame_dist_full.lo), lerp(frame_dist_warm.hi, frame_dist_full.hi)};
}

std::string_view to_string(BatchSource source) {
    return source == BatchSource::graph ? "graph" : "frame_distance";
}

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// `count` distinct positions in [a, b], both endpoints included when count >= 2.
std::vector<int> spread_positions(int count, int a, int b, std::mt19937_64& rng) {
    std::vector<int> out{a};
    if (count == 1) return out;
    out.push_back(b);
    std::vector<int> interior(std::max(0, b - a - 1));
    std::iota(interior.begin(), interior.end(), a + 1);
    std::shuffle(interior.begin(), interior.end(), rng);
    out.insert(out.end(), interior.begin(), interior.begin() + (count - 2));
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

CurriculumBatch sample_frame_batch(int iteration, std::span<const int> sequence, const CurriculumConfig& config,
                                   std::mt19937_64& rng) {
    const int n = static_cast<int>(sequence.size());
    const int ni = config.inputs_per_batch;
    const int nt = config.targets_per_batch;
    const IntRange range = config.frame_distance_at(iteration);
    const int hi = std::min(range.hi, n - 1);
    if (hi < range.lo + (ni - 1) + (nt - 1)) {
        throw Error(ErrorCode::InsufficientFrames, "sequence of " + std::to_string(n) +
                                                       " frames cannot hold a batch with frame distance [" +
                                                       std::to_string(range.lo) + ", " + std::to_string(range.hi) + "]");
    }
    // Inputs in [s, s+w], targets in [s+w+g, s+w+g+u]: distances span [g, w+g+u].
    const int w = uniform_int(rng, ni - 1, hi - range.lo - (nt - 1));
    const int u = uniform_int(rng, nt - 1, hi - range.lo - w);
    const int g = uniform_int(rng, range.lo, hi - w - u);
    const int s = uniform_int(rng, 0, n - 1 - (w + g + u));
    std::vector<int> inputs = spread_positions(ni, s, s + w, rng);
    std::vector<int> targets = spread_positions(nt, s + w + g, s + w + g + u, rng);
    if (std::bernoulli_distribution(0.5)(rng)) {
        for (int& p : inputs) p = n - 1 - p;
        for (int& p : targets) p = n - 1 - p;
    }
    CurriculumBatch batch;
    batch.iteration = iteration;
    batch.source = BatchSource::frame_distance;
    for (const int p : inputs) batch.input_ids.push_back(sequence[p]);
    for (const int p : targets) batch.target_ids.push_back(sequence[p]);
    return batch;
}

CurriculumBatch sample_graph_batch(int iteration, const ViewGraph& graph, const CurriculumConfig& config,
                                   std::mt19937_64& rng) {
    const std::size_t need = static_cast<std::size_t>(config.batch_size() - 1);
    std::vector<int> eligible;
    for (const auto& node : graph.nodes()) {
        if (graph.neighbors(node.id).size() >= need) eligible.push_back(node.id);
    }
    if (eligible.empty()) {
        throw Error(ErrorCode::InsufficientNeighbors,
                    "no graph node has " + std::to_string(need) + " neighbors above the edge cutoff");
    }
    std::sort(eligible.begin(), eligible.end());

    int start = eligible.front();
    std::vector<int> members;
    if (iteration < config.warmup_iters) {
        double best = -1.0;
        for (const int id : eligible) {
            double sum = 0.0;
            for (const auto& [nb, v] : graph.neighbors(id)) sum += v;
            if (sum > best) {
                best = sum;
                start = id;
            }
        }
        auto ranked = graph.neighbors(start);
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
        for (std::size_t k = 0; k < need; ++k) members.push_back(ranked[k].first);
    } else {
        start = eligible[uniform_int(rng, 0, static_cast<int>(eligible.size()) - 1)];
        auto pool = graph.neighbors(start);
        std::vector<double> weights;
        for (const auto& [nb, v] : pool) weights.push_back(std::max(1.0 - v, 0.05));
        for (std::size_t k = 0; k < need; ++k) {
            std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
            const std::size_t at = pick(rng);
            members.push_back(pool[at].first);
            weights[at] = 0.0;
        }
    }
    std::shuffle(members.begin(), members.end(), rng);

    CurriculumBatch batch;
    batch.iteration = iteration;
    batch.source = BatchSource::graph;
    batch.input_ids.push_back(start);
    const auto split = members.begin() + (config.inputs_per_batch - 1);
    batch.input_ids.insert(batch.input_ids.end(), members.begin(), split);
    batch.target_ids.assign(split, members.end());
    return batch;
}

CurriculumBatch sample_batch(int iteration, const ViewGraph& graph, std::span<const int> sequence,
                             const CurriculumConfig& config, std::mt19937_64& rng) {
    if (graph.size() == 0 || sequence.empty()) {
        throw Error(ErrorCode::InvalidArgument, "curriculum sampling needs a graph and a sequence");
    }
    if (std::bernoulli_distribution(config.graph_probability)(rng)) {
        return sample_graph_batch(iteration, graph, config, rng);
    }
    return sample_frame_batch(iteration, sequence, config, rng);
}

CurriculumSampler::CurriculumSampler(const ViewGraph& graph, std::vector<int> sequence, CurriculumConfig config)
    : graph_(graph), sequence_(std::move(sequence)), config_(config), rng_(config.seed) {
    config_.validate();
}

CurriculumBatch CurriculumSampler::next(int iteration) {
    return sample_batch(iteration, graph_, sequence_, config_, rng_);
}

void PseudoGtConfig::validate() const {
    if (interval < 1 || per_event < 1) throw Error(ErrorCode::InvalidArgument, "interval and per_event must be positive");
    if (!(weight_lo >= 0.0 && weight_lo <= weight_hi)) {
        throw Error(ErrorCode::InvalidArgument, "weight band needs 0 <= lo <= hi");
    }
    if (!(quality_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "quality_max must be positive");
}

double PseudoGtConfig::weight_for(double quality_score) const {
    return weight_hi - (weight_hi - weight_lo) * std::clamp(quality_score / quality_max, 0.0, 1.0);
}

PseudoGtSchedule build_pseudo_gt_schedule(std::vector<PseudoGtCandidate> candidates, const PseudoGtConfig& config) {
    config.validate();
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        return a.overlap != b.overlap ? a.overlap < b.overlap : a.id < b.id;
    });
    PseudoGtSchedule schedule;
    std::size_t next = 0;
    for (int it = config.interval; it <= config.total_iters && next < candidates.size(); it += config.interval) {
        PseudoGtEvent event;
        event.iteration = it;
        for (int k = 0; k < config.per_event && next < candidates.size(); ++k, ++next) {
            event.freeview_ids.push_back(candidates[next].id);
            event.weights.push_back(config.weight_for(candidates[next].quality_score));
        }
        schedule.events.push_back(std::move(event));
    }
    return schedule;
}

PseudoGtSchedule build_pseudo_gt_schedule(const ViewGraph& graph, std::span<const int> training_ids,
                                          const std::vector<FreeViewRecord>& records, const PseudoGtConfig& config,
                                          const CertaintyGrid* grid) {
    std::vector<PseudoGtCandidate> candidates;
    for (const auto& r : records) {
        if (!r.is_selected()) continue;
        PseudoGtCandidate c;
        c.id = r.candidate.pose.id;
        c.quality_score = r.quality ? r.quality->quality_score : config.quality_max;
        const bool moved = !r.rectify_history.empty();
        if (grid != nullptr && (moved || !graph.contains(c.id))) {
            const VisibilityVector vis = compute_visibility(r.final_pose, *grid);
            for (const int t : training_ids) c.overlap = std::max(c.overlap, wiou(vis, graph.node(t).visibility));
        } else {
            for (const int t : training_ids) c.overlap = std::max(c.overlap, graph.wiou(c.id, t));
        }
        candidates.push_back(c);
    }
    return build_pseudo_gt_schedule(std::move(candidates), config);
}

void write_batches_jsonl(const std::vector<CurriculumBatch>& batches, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    for (const auto& b : batches) {
        const detail::json j = {{"iteration", b.iteration},
                                {"source", std::string(to_string(b.source))},
                                {"inputs", b.input_ids},
                                {"targets", b.target_ids}};
        out << j.dump() << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

void write_schedule_json(const PseudoGtSchedule& schedule, const PseudoGtConfig& config,
                         const std::filesystem::path& path) {
    detail::json events = detail::json::array();
    for (const auto& e : schedule.events) {
        events.push_back({{"iter", e.iteration}, {"ids", e.freeview_ids}, {"weights", e.weights}});
    }
    const detail::json doc = {{"interval", config.interval},
                              {"per_event", config.per_event},
                              {"overlap_aggregate", "max_over_training"},
                              {"weight_band", {config.weight_lo, config.weight_hi}},
                              {"events", std::move(events)}};
    detail::write_json_file(doc, path);
}

PseudoGtSchedule read_schedule_json(const std::filesystem::path& path) {
    const detail::json doc = detail::read_json_file(path);
    PseudoGtSchedule schedule;
    try {
        for (const auto& e : doc.at("events")) {
            schedule.events.push_back({e.at("iter").get<int>(), e.at("ids").get<std::vector<int>>(),
                                       e.at("weights").get<std::vector<double>>()});
        }
    } catch (const detail::json::exception& e) {
        throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
    }
    return schedule;
}

} // namespace viewforge
