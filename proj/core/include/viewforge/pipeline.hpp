#pragma once

#include "viewforge/config.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace viewforge {

enum class Stage { grid, candidates, graph, select, render, batches, schedule, all };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view s);

/// Sidecar file names inside the output directory.
namespace sidecar {
inline constexpr std::string_view grid_bin = "grid.bin";
inline constexpr std::string_view grid_json = "grid.json";
inline constexpr std::string_view candidates = "candidates.json";
inline constexpr std::string_view graph_json = "graph.json";
inline constexpr std::string_view graph_dot = "graph.dot";
inline constexpr std::string_view freeviews = "freeviews.json";
inline constexpr std::string_view renders_dir = "renders";
inline constexpr std::string_view rectify_pairs = "rectify_pairs.json";
inline constexpr std::string_view batches = "batches.jsonl";
inline constexpr std::string_view schedule = "schedule.json";
inline constexpr std::string_view manifest = "manifest.json";
} // namespace sidecar

struct StageReport {
    Stage stage = Stage::grid;
    std::map<std::string, std::size_t> counts;
    std::map<std::string, std::string> input_hashes;
    std::map<std::string, std::string> output_hashes;
    double seconds = 0.0;
};

/// Runs one stage (or all of them in order) over the sidecars in
/// config.output_dir, then merges the stage entry into manifest.json.
/// Throws MissingPrerequisite naming the first absent input.
std::vector<StageReport> run_stage(Stage stage, const PipelineConfig& config);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string hash_file(const std::filesystem::path& path);

} // namespace viewforge
