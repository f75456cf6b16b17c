#include "viewforge/config.hpp"

#include "viewforge/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace viewforge {

void PipelineConfig::validate() const {
    if (grid.resolution < 1) throw Error(ErrorCode::ResolutionTooSmall, "grid.resolution must be >= 1");
    if (!(grid.epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid.epsilon must be positive");
    if (!(grid.quantile_lo >= 0.0 && grid.quantile_lo < grid.quantile_hi && grid.quantile_hi <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "grid quantiles need 0 <= lo < hi <= 1");
    }
    if (!(edge_cutoff >= 0.0 && edge_cutoff <= 1.0)) throw Error(ErrorCode::InvalidArgument, "graph.edge_cutoff must lie in [0, 1]");
    if (!(detail_scale > 0.0 && contrast_scale > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "quality scales must be positive");
    }
    placement.validate();
    selector.validate();
    curriculum.validate();
    schedule.validate();
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& v) {
    T out{};
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("not a number: '" + v + "'");
    return out;
}

double parse_double(const std::string& v) {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("not a number: '" + v + "'");
    return out;
}

IntRange parse_range(const std::string& v) {
    const auto comma = v.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("expected 'lo, hi'");
    return {parse_number<int>(trim(v.substr(0, comma))), parse_number<int>(trim(v.substr(comma + 1)))};
}

std::vector<double> parse_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
    return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::filesystem::path&)>;

std::filesystem::path resolve(const std::string& v, const std::filesystem::path& base) {
    const std::filesystem::path p(v);
    return p.is_absolute() || base.empty() ? p : base / p;
}

const std::map<std::string, Setter>& setters() {
    using P = PipelineConfig;
    using S = const std::string&;
    using B = const std::filesystem::path&;
    static const std::map<std::string, Setter> table = {
        {"input.scene", [](P& c, S v, B b) { c.scene_path = resolve(v, b); }},
        {"input.cameras", [](P& c, S v, B b) { c.camera_path = resolve(v, b); }},
        {"input.camera_format", [](P& c, S v, B) { c.camera_format = camera_format_from_string(v); }},
        {"output.dir", [](P& c, S v, B b) { c.output_dir = resolve(v, b); }},
        {"pipeline.seed", [](P& c, S v, B) { c.seed = parse_number<std::uint64_t>(v); }},
        {"grid.resolution", [](P& c, S v, B) { c.grid.resolution = parse_number<int>(v); }},
        {"grid.epsilon", [](P& c, S v, B) { c.grid.epsilon = parse_double(v); }},
        {"grid.quantile_lo", [](P& c, S v, B) { c.grid.quantile_lo = parse_double(v); }},
        {"grid.quantile_hi", [](P& c, S v, B) { c.grid.quantile_hi = parse_double(v); }},
        {"grid.pad", [](P& c, S v, B) { c.grid.pad = parse_double(v); }},
        {"graph.edge_cutoff", [](P& c, S v, B) { c.edge_cutoff = parse_double(v); }},
        {"placement.num_anchors", [](P& c, S v, B) { c.placement.num_anchors = parse_number<int>(v); }},
        {"placement.frames_per_traj", [](P& c, S v, B) { c.placement.frames_per_traj = parse_number<int>(v); }},
        {"placement.anchor_method", [](P& c, S v, B) { c.placement.anchor_method = anchor_method_from_string(v); }},
        {"placement.anchor_pos_sigma", [](P& c, S v, B) { c.placement.anchor_pos_sigma = parse_double(v); }},
        {"placement.anchor_rot_jitter_deg", [](P& c, S v, B) { c.placement.anchor_rot_jitter_deg = parse_double(v); }},
        {"placement.pool_pos_sigma", [](P& c, S v, B) { c.placement.pool_pos_sigma = parse_double(v); }},
        {"placement.pool_rot_jitter_deg", [](P& c, S v, B) { c.placement.pool_rot_jitter_deg = parse_double(v); }},
        {"placement.jitter_fraction", [](P& c, S v, B) { c.placement.jitter_fraction = parse_double(v); }},
        {"placement.central_fraction", [](P& c, S v, B) { c.placement.central_fraction = parse_double(v); }},
        {"selector.nms_wiou_threshold", [](P& c, S v, B) { c.selector.nms_wiou_threshold = parse_double(v); }},
        {"selector.nms_target", [](P& c, S v, B) { c.selector.nms_target = parse_number<int>(v); }},
        {"selector.quality_max", [](P& c, S v, B) { c.selector.quality_max = parse_double(v); }},
        {"selector.depth_range_min", [](P& c, S v, B) { c.selector.depth_range_min = parse_double(v); }},
        {"selector.black_ratio_max", [](P& c, S v, B) { c.selector.black_ratio_max = parse_double(v); }},
        {"selector.rectify_steps", [](P& c, S v, B) { c.selector.rectify_steps = parse_list(v); }},
        {"selector.final_target", [](P& c, S v, B) { c.selector.final_target = parse_number<int>(v); }},
        {"selector.occupancy_reject_percentile",
         [](P& c, S v, B) { c.selector.occupancy_reject_percentile = parse_double(v); }},
        {"render.width", [](P& c, S v, B) { c.selector.render_width = parse_number<int>(v); }},
        {"render.height", [](P& c, S v, B) { c.selector.render_height = parse_number<int>(v); }},
        {"render.alpha_floor", [](P& c, S v, B) { c.selector.alpha_floor = parse_double(v); }},
        {"render.max_primitives", [](P& c, S v, B) { c.selector.render_max_count = parse_number<std::size_t>(v); }},
        {"quality.detail_scale", [](P& c, S v, B) { c.detail_scale = parse_double(v); }},
        {"quality.contrast_scale", [](P& c, S v, B) { c.contrast_scale = parse_double(v); }},
        {"curriculum.inputs_per_batch", [](P& c, S v, B) { c.curriculum.inputs_per_batch = parse_number<int>(v); }},
        {"curriculum.targets_per_batch", [](P& c, S v, B) { c.curriculum.targets_per_batch = parse_number<int>(v); }},
        {"curriculum.warmup_iters", [](P& c, S v, B) { c.curriculum.warmup_iters = parse_number<int>(v); }},
        {"curriculum.total_iters", [](P& c, S v, B) { c.curriculum.total_iters = parse_number<int>(v); }},
        {"curriculum.frame_dist_warm", [](P& c, S v, B) { c.curriculum.frame_dist_warm = parse_range(v); }},
        {"curriculum.frame_dist_full", [](P& c, S v, B) { c.curriculum.frame_dist_full = parse_range(v); }},
        {"curriculum.graph_probability", [](P& c, S v, B) { c.curriculum.graph_probability = parse_double(v); }},
        {"schedule.interval", [](P& c, S v, B) { c.schedule.interval = parse_number<int>(v); }},
        {"schedule.per_event", [](P& c, S v, B) { c.schedule.per_event = parse_number<int>(v); }},
        {"schedule.weight_lo", [](P& c, S v, B) { c.schedule.weight_lo = parse_double(v); }},
        {"schedule.weight_hi", [](P& c, S v, B) { c.schedule.weight_hi = parse_double(v); }},
        {"schedule.total_iters", [](P& c, S v, B) { c.schedule.total_iters = parse_number<int>(v); }},
    };
    return table;
}

} // namespace

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    PipelineConfig config;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find_first_of("#;");
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorCode::ConfigParse, where + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ConfigParse, where + ": expected 'key = value'");
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw Error(ErrorCode::ConfigParse, where + ": unknown field '" + key + "'");
        try {
            it->second(config, value, base_dir);
        } catch (const std::exception& e) {
            throw Error(ErrorCode::ConfigParse, where + ": field '" + key + "': " + e.what());
        }
    }
    config.schedule.quality_max = config.selector.quality_max;
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigParse, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::string to_config_text(const PipelineConfig& c) {
    std::ostringstream o;
    o.precision(15);
    const auto& s = c.selector;
    std::string steps;
    for (std::size_t i = 0; i < s.rectify_steps.size(); ++i) {
        std::ostringstream v;
        v.precision(15);
        v << s.rectify_steps[i];
        steps += (i ? ", " : "") + v.str();
    }
    o << "[input]\nscene = " << c.scene_path.string() << "\ncameras = " << c.camera_path.string()
      << "\ncamera_format = " << (c.camera_format == CameraFormat::colmap_text ? "colmap_text" : "transforms_json")
      << "\n\n[output]\ndir = " << c.output_dir.string() << "\n\n[pipeline]\nseed = " << c.seed
      << "\n\n[grid]\nresolution = " << c.grid.resolution << "\nepsilon = " << c.grid.epsilon
      << "\nquantile_lo = " << c.grid.quantile_lo << "\nquantile_hi = " << c.grid.quantile_hi
      << "\npad = " << c.grid.pad << "\n\n[graph]\nedge_cutoff = " << c.edge_cutoff
      << "\n\n[placement]\nnum_anchors = " << c.placement.num_anchors
      << "\nframes_per_traj = " << c.placement.frames_per_traj
      << "\nanchor_method = " << to_string(c.placement.anchor_method)
      << "\nanchor_pos_sigma = " << c.placement.anchor_pos_sigma
      << "\nanchor_rot_jitter_deg = " << c.placement.anchor_rot_jitter_deg
      << "\npool_pos_sigma = " << c.placement.pool_pos_sigma
      << "\npool_rot_jitter_deg = " << c.placement.pool_rot_jitter_deg
      << "\njitter_fraction = " << c.placement.jitter_fraction
      << "\ncentral_fraction = " << c.placement.central_fraction
      << "\n\n[selector]\nnms_wiou_threshold = " << s.nms_wiou_threshold << "\nnms_target = " << s.nms_target
      << "\nquality_max = " << s.quality_max << "\ndepth_range_min = " << s.depth_range_min
      << "\nblack_ratio_max = " << s.black_ratio_max << "\nrectify_steps = " << steps
      << "\nfinal_target = " << s.final_target << "\noccupancy_reject_percentile = " << s.occupancy_reject_percentile
      << "\n\n[render]\nwidth = " << s.render_width << "\nheight = " << s.render_height
      << "\nalpha_floor = " << s.alpha_floor << "\nmax_primitives = " << s.render_max_count
      << "\n\n[quality]\ndetail_scale = " << c.detail_scale << "\ncontrast_scale = " << c.contrast_scale
      << "\n\n[curriculum]\ninputs_per_batch = " << c.curriculum.inputs_per_batch
      << "\ntargets_per_batch = " << c.curriculum.targets_per_batch
      << "\nwarmup_iters = " << c.curriculum.warmup_iters << "\ntotal_iters = " << c.curriculum.total_iters
      << "\nframe_dist_warm = " << c.curriculum.frame_dist_warm.lo << ", " << c.curriculum.frame_dist_warm.hi
      << "\nframe_dist_full = " << c.curriculum.frame_dist_full.lo << ", " << c.curriculum.frame_dist_full.hi
      << "\ngraph_probability = " << c.curriculum.graph_probability
      << "\n\n[schedule]\ninterval = " << c.schedule.interval << "\nper_event = " << c.schedule.per_event
      << "\nweight_lo = " << c.schedule.weight_lo << "\nweight_hi = " << c.schedule.weight_hi
      << "\ntotal_iters = " << c.schedule.total_iters << "\n";
    return o.str();
}

} // namespace viewforge
