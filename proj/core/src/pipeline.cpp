#include "viewforge/pipeline.hpp"

#include "json_util.hpp"
#include "viewforge/certainty_grid.hpp"
#include "viewforge/error.hpp"
#include "viewforge/image.hpp"
#include "viewforge/parallel.hpp"
#include "viewforge/random.hpp"
#include "viewforge/renderer.hpp"
#include "viewforge/scene_io.hpp"

#include <spdlog/spdlog.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

namespace viewforge {

namespace fs = std::filesystem;
using detail::json;

namespace {

constexpr std::array<std::string_view, 8> kStageNames = {"grid",  "candidates", "graph",    "select",
                                                         "render", "batches",    "schedule", "all"};

} // namespace

std::string_view to_string(Stage stage) { return kStageNames[static_cast<std::size_t>(stage)]; }

Stage stage_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kStageNames.size(); ++i) {
        if (kStageNames[i] == s) return static_cast<Stage>(i);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown stage '" + std::string(s) + "'");
}

std::string hash_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
    return buf;
}

namespace {

class StageContext {
public:
    StageContext(Stage stage, const PipelineConfig& config) : config_(config) {
        report_.stage = stage;
        fs::create_directories(config.output_dir);
    }

    fs::path out(std::string_view name) const { return config_.output_dir / fs::path(name); }

    /// Registers an input, failing with MissingPrerequisite when absent.
    fs::path need(const fs::path& path, std::string_view produced_by) {
        if (!fs::exists(path)) {
            throw Error(ErrorCode::MissingPrerequisite, "missing " + path.string() + " (produced by the " +
                                                            std::string(produced_by) + " stage)");
        }
        inputs_.push_back(path);
        return path;
    }
    fs::path need_sidecar(std::string_view name, std::string_view produced_by) { return need(out(name), produced_by); }
    void wrote(const fs::path& path) { outputs_.push_back(path); }
    void count(const std::string& key, std::size_t value) { report_.counts[key] = value; }

    StageReport finish(double seconds) {
        for (const auto& p : inputs_) report_.input_hashes[relative(p)] = hash_file(p);
        for (const auto& p : outputs_) report_.output_hashes[relative(p)] = hash_file(p);
        report_.seconds = seconds;
        return report_;
    }

    const PipelineConfig& config() const { return config_; }

private:
    std::string relative(const fs::path& p) const {
        const fs::path rel = p.lexically_relative(config_.output_dir);
        return (rel.empty() || *rel.begin() == "..") ? p.filename().string() : rel.generic_string();
    }

    const PipelineConfig& config_;
    StageReport report_;
    std::vector<fs::path> inputs_;
    std::vector<fs::path> outputs_;
};

GaussianScene load_scene(StageContext& ctx) {
    return load_gaussian_ply(ctx.need(ctx.config().scene_path, "input"));
}

CertaintyGrid load_grid(StageContext& ctx) { return read_grid_binary(ctx.need_sidecar(sidecar::grid_bin, "grid")); }

std::vector<CameraPose> load_training(StageContext& ctx, const CertaintyGrid& grid) {
    CameraLoadOptions opts;
    opts.bounds = grid.bounds();
    return load_cameras(ctx.need(ctx.config().camera_path, "input"), ctx.config().camera_format, opts);
}

void stage_grid(StageContext& ctx) {
    const auto& c = ctx.config();
    const GaussianScene scene = load_scene(ctx);
    const SceneBounds bounds = compute_bounds(scene, c.grid.quantile_lo, c.grid.quantile_hi, c.grid.pad);
    const CertaintyGrid grid = build_certainty_grid(scene, bounds, c.grid.resolution, c.grid.epsilon);
    write_grid_binary(grid, ctx.out(sidecar::grid_bin));
    write_grid_json(grid, ctx.out(sidecar::grid_json));
    ctx.wrote(ctx.out(sidecar::grid_bin));
    ctx.wrote(ctx.out(sidecar::grid_json));
    ctx.count("primitives", scene.size());
    ctx.count("occupied_voxels", grid.occupied());
}

void stage_candidates(StageContext& ctx) {
    const CertaintyGrid grid = load_grid(ctx);
    const auto training = load_training(ctx, grid);
    PlacementConfig placement = ctx.config().placement;
    placement.seed = derive_seed(ctx.config().seed, "candidates");
    const auto pool = generate_candidate_pool(training, grid, placement);
    write_candidates_json(pool, ctx.out(sidecar::candidates));
    ctx.wrote(ctx.out(sidecar::candidates));
    ctx.count("training", training.size());
    ctx.count("pool", pool.size());
}

ViewGraph graph_over(const std::vector<CameraPose>& training, const std::vector<CandidatePose>& pool,
                     const CertaintyGrid& grid, double cutoff) {
    std::vector<CameraPose> poses = training;
    for (const auto& c : pool) poses.push_back(c.pose);
    return build_view_graph(poses, grid, cutoff);
}

void stage_graph(StageContext& ctx) {
    const CertaintyGrid grid = load_grid(ctx);
    const auto training = load_training(ctx, grid);
    const auto pool = read_candidates_json(ctx.need_sidecar(sidecar::candidates, "candidates"));
    const ViewGraph graph = graph_over(training, pool, grid, ctx.config().edge_cutoff);
    write_graph_json(graph, ctx.out(sidecar::graph_json));
    write_graph_dot(graph, ctx.out(sidecar::graph_dot));
    ctx.wrote(ctx.out(sidecar::graph_json));
    ctx.wrote(ctx.out(sidecar::graph_dot));
    ctx.count("nodes", graph.size());
    ctx.count("edges", graph.edge_count());
}

std::string freeview_color_path(int id) { return std::string(sidecar::renders_dir) + "/fv_" + std::to_string(id) + ".png"; }
std::string freeview_depth_path(int id) {
    return std::string(sidecar::renders_dir) + "/fv_" + std::to_string(id) + "_depth.pfm";
}
std::string training_color_path(int id) {
    return std::string(sidecar::renders_dir) + "/train_" + std::to_string(id) + ".png";
}

void stage_select(StageContext& ctx) {
    const auto& c = ctx.config();
    const GaussianScene scene = load_scene(ctx);
    const CertaintyGrid grid = load_grid(ctx);
    const auto training = load_training(ctx, grid);
    const auto pool = read_candidates_json(ctx.need_sidecar(sidecar::candidates, "candidates"));
    ctx.need_sidecar(sidecar::graph_json, "graph");
    // The stored graph drops sub-cutoff edges; selection needs exact overlaps.
    const ViewGraph graph = graph_over(training, pool, grid, c.edge_cutoff);
    const HeuristicQualityScorer scorer(c.detail_scale, c.contrast_scale);
    const GateInputs inputs{scene, grid, graph, training, scorer};
    SelectionResult result = run_selection(pool, inputs, c.selector);
    for (auto& r : result.records) {
        if (!r.is_selected()) continue;
        r.color_path = freeview_color_path(r.candidate.pose.id);
        r.depth_path = freeview_depth_path(r.candidate.pose.id);
    }
    write_freeviews_json(result.records, ctx.out(sidecar::freeviews));
    ctx.wrote(ctx.out(sidecar::freeviews));
    const auto& f = result.funnel;
    ctx.count("pool", f.pool);
    ctx.count("feasible", f.feasible);
    ctx.count("nms", f.nms);
    ctx.count("gated", f.gated);
    ctx.count("final", f.final_count);
    spdlog::info("selection funnel: pool {} -> feasible {} -> nms {} -> gated {} -> final {}", f.pool, f.feasible,
                 f.nms, f.gated, f.final_count);
}

void stage_render(StageContext& ctx) {
    const auto& c = ctx.config();
    const GaussianScene scene = load_scene(ctx);
    const CertaintyGrid grid = load_grid(ctx);
    const auto training = load_training(ctx, grid);
    const auto records = read_freeviews_json(ctx.need_sidecar(sidecar::freeviews, "select"));
    fs::create_directories(ctx.out(sidecar::renders_dir));

    std::vector<const FreeViewRecord*> selected;
    std::set<int> reference_ids;
    for (const auto& r : records) {
        if (!r.is_selected()) continue;
        selected.push_back(&r);
        if (r.reference_id) reference_ids.insert(*r.reference_id);
    }
    std::vector<CameraPose> references;
    for (const auto& t : training) {
        if (reference_ids.contains(t.id)) references.push_back(t);
    }

    const SplatRenderer renderer(scene);
    const int w = c.selector.render_width;
    const int h = c.selector.render_height;
    parallel_for_dynamic(0, selected.size() + references.size(), [&](std::size_t k) {
        if (k < selected.size()) {
            const FreeViewRecord& r = *selected[k];
            const RenderOutput out = renderer.render(r.final_pose.resized(w, h));
            write_png(out.color, ctx.out(freeview_color_path(r.candidate.pose.id)));
            write_pfm(out.depth, ctx.out(freeview_depth_path(r.candidate.pose.id)));
        } else {
            const CameraPose& t = references[k - selected.size()];
            write_png(renderer.render(t.resized(w, h)).color, ctx.out(training_color_path(t.id)));
        }
    });

    json pairs = json::array();
    for (const FreeViewRecord* r : selected) {
        const int id = r->candidate.pose.id;
        ctx.wrote(ctx.out(freeview_color_path(id)));
        ctx.wrote(ctx.out(freeview_depth_path(id)));
        pairs.push_back({{"freeview_id", id},
                         {"reference_training_id", r->reference_id ? json(*r->reference_id) : json(nullptr)},
                         {"freeview_image", freeview_color_path(id)},
                         {"reference_image", r->reference_id ? json(training_color_path(*r->reference_id)) : json(nullptr)}});
    }
    for (const auto& t : references) ctx.wrote(ctx.out(training_color_path(t.id)));
    detail::write_json_file(pairs, ctx.out(sidecar::rectify_pairs));
    ctx.wrote(ctx.out(sidecar::rectify_pairs));
    ctx.count("freeview_renders", selected.size());
    ctx.count("reference_renders", references.size());
}

void stage_batches(StageContext& ctx) {
    const ViewGraph full = read_graph_json(ctx.need_sidecar(sidecar::graph_json, "graph"));
    std::vector<int> sequence;
    for (const auto& n : full.nodes()) {
        if (n.kind == PoseKind::training) sequence.push_back(n.id);
    }
    std::sort(sequence.begin(), sequence.end());
    const ViewGraph graph = full.subgraph(sequence);
    CurriculumConfig cfg = ctx.config().curriculum;
    cfg.seed = derive_seed(ctx.config().seed, "batches");
    CurriculumSampler sampler(graph, sequence, cfg);
    std::vector<CurriculumBatch> batches;
    batches.reserve(static_cast<std::size_t>(cfg.total_iters));
    std::size_t from_graph = 0;
    for (int it = 0; it < cfg.total_iters; ++it) {
        batches.push_back(sampler.next(it));
        from_graph += batches.back().source == BatchSource::graph ? 1 : 0;
    }
    write_batches_jsonl(batches, ctx.out(sidecar::batches));
    ctx.wrote(ctx.out(sidecar::batches));
    ctx.count("batches", batches.size());
    ctx.count("graph_batches", from_graph);
}

void stage_schedule(StageContext& ctx) {
    const CertaintyGrid grid = load_grid(ctx);
    const auto training = load_training(ctx, grid);
    const auto records = read_freeviews_json(ctx.need_sidecar(sidecar::freeviews, "select"));
    PseudoGtConfig cfg = ctx.config().schedule;
    cfg.quality_max = ctx.config().selector.quality_max;

    std::vector<VisibilityVector> train_vis(training.size());
    parallel_for(0, training.size(), [&](std::size_t i) { train_vis[i] = compute_visibility(training[i], grid); });
    std::vector<const FreeViewRecord*> selected;
    for (const auto& r : records) {
        if (r.is_selected()) selected.push_back(&r);
    }
    std::vector<PseudoGtCandidate> candidates(selected.size());
    parallel_for(0, selected.size(), [&](std::size_t k) {
        const FreeViewRecord& r = *selected[k];
        const VisibilityVector vis = compute_visibility(r.final_pose, grid);
        PseudoGtCandidate& c = candidates[k];
        c.id = r.candidate.pose.id;
        c.quality_score = r.quality ? r.quality->quality_score : cfg.quality_max;
        for (const auto& tv : train_vis) c.overlap = std::max(c.overlap, wiou(vis, tv));
    });
    const PseudoGtSchedule schedule = build_pseudo_gt_schedule(std::move(candidates), cfg);
    write_schedule_json(schedule, cfg, ctx.out(sidecar::schedule));
    ctx.wrote(ctx.out(sidecar::schedule));
    std::size_t scheduled = 0;
    for (const auto& e : schedule.events) scheduled += e.freeview_ids.size();
    ctx.count("events", schedule.events.size());
    ctx.count("scheduled", scheduled);
}

void record_manifest(const PipelineConfig& config, const StageReport& report) {
    const fs::path path = config.output_dir / fs::path(sidecar::manifest);
    json doc = json::object();
    if (fs::exists(path)) {
        try {
            doc = detail::read_json_file(path);
        } catch (const Error&) {
            doc = json::object();
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(to_config_text(config))));
    doc["seed"] = config.seed;
    doc["config_hash"] = buf;
    doc["stages"][std::string(to_string(report.stage))] = {{"counts", report.counts},
                                                           {"inputs", report.input_hashes},
                                                           {"outputs", report.output_hashes},
                                                           {"wall_seconds", report.seconds}};
    detail::write_json_file(doc, path);
}

} // namespace

std::vector<StageReport> run_stage(Stage stage, const PipelineConfig& config) {
    config.validate();
    if (stage == Stage::all) {
        std::vector<StageReport> reports;
        for (const Stage s : {Stage::grid, Stage::candidates, Stage::graph, Stage::select, Stage::render,
                              Stage::batches, Stage::schedule}) {
            auto r = run_stage(s, config);
            reports.insert(reports.end(), r.begin(), r.end());
        }
        return reports;
    }
    const auto t0 = std::chrono::steady_clock::now();
    StageContext ctx(stage, config);
    spdlog::info("stage {} starting", to_string(stage));
    switch (stage) {
    case Stage::grid: stage_grid(ctx); break;
    case Stage::candidates: stage_candidates(ctx); break;
    case Stage::graph: stage_graph(ctx); break;
    case Stage::select: stage_select(ctx); break;
    case Stage::render: stage_render(ctx); break;
    case Stage::batches: stage_batches(ctx); break;
    case Stage::schedule: stage_schedule(ctx); break;
    case Stage::all: break;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    StageReport report = ctx.finish(seconds);
    record_manifest(config, report);
    spdlog::info("stage {} done in {:.2f} s", to_string(stage), seconds);
    return {report};
}

} // namespace viewforge
