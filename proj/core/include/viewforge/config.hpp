#pragma once

#include "viewforge/scene_io.hpp"
#include "viewforge/selector.hpp"
#include "viewforge/training_feeds.hpp"
#include "viewforge/trajectory.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace viewforge {

struct GridConfig {
    int resolution = 128;
    double epsilon = 1e-8;
    double quantile_lo = 0.01;
    double quantile_hi = 0.99;
    double pad = 0.05;
};

struct PipelineConfig {
    std::filesystem::path scene_path;
    std::filesystem::path camera_path;
    CameraFormat camera_format = CameraFormat::transforms_json;
    std::filesystem::path output_dir = "out";
    GridConfig grid;
    double edge_cutoff = 0.05;
    PlacementConfig placement;
    SelectorConfig selector;
    double detail_scale = 3e-3;
    double contrast_scale = 0.06;
    CurriculumConfig curriculum;
    PseudoGtConfig schedule;
    std::uint64_t seed = 0;

    void validate() const;
};

/// INI-style text: `[section]` headers, `key = value` lines, `#` or `;`
/// comments. Relative paths resolve against `base_dir`. Unknown keys and bad
/// values raise ConfigParse with the line number.
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Canonical text form; parse_config(to_config_text(c)) round-trips.
std::string to_config_text(const PipelineConfig& config);

} // namespace viewforge
