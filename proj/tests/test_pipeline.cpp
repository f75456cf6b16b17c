#include "oracles.hpp"

#include "viewforge/error.hpp"
#include "viewforge/parallel.hpp"
#include "viewforge/pipeline.hpp"
#include "viewforge/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <gtest/gtest.h>

#include <fstream>

using namespace vft;

namespace {

// A reduced configuration so the whole chain runs in a few seconds.
PipelineConfig small_config(const std::filesystem::path& dir) {
    const SyntheticRoom room = make_synthetic_room();
    write_synthetic_bundle(room, dir);
    PipelineConfig c = load_config(dir / "pipeline.cfg");
    c.output_dir = dir / "out";
    c.grid.resolution = 32;
    c.placement.num_anchors = 3;
    c.placement.frames_per_traj = 6;
    c.selector.nms_target = 60;
    c.selector.final_target = 20;
    c.selector.render_width = 96;
    c.selector.render_height = 72;
    c.curriculum.total_iters = 500;
    c.curriculum.warmup_iters = 100;
    c.schedule.total_iters = 20000;
    c.schedule.interval = 3000;
    return c;
}

nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

const std::vector<std::string> kSidecars = {"grid.bin",        "candidates.json", "graph.json",    "freeviews.json",
                                            "rectify_pairs.json", "batches.jsonl", "schedule.json"};

} // namespace

TEST(Pipeline, StageNames) {
    for (const Stage s : {Stage::grid, Stage::candidates, Stage::graph, Stage::select, Stage::render, Stage::batches,
                          Stage::schedule, Stage::all}) {
        EXPECT_EQ(stage_from_string(to_string(s)), s);
    }
    EXPECT_THROW(stage_from_string("nope"), Error);
}

TEST(Pipeline, StagewiseEqualsAllAndIsDeterministic) {
    TempDir a("pipe_a");
    TempDir b("pipe_b");
    const PipelineConfig ca = small_config(a.path());
    const PipelineConfig cb = small_config(b.path());
    set_max_threads(1);
    const auto reports = run_stage(Stage::all, ca);
    EXPECT_EQ(reports.size(), 7u);
    set_max_threads(3);
    for (const Stage s : {Stage::grid, Stage::candidates, Stage::graph, Stage::select, Stage::render, Stage::batches,
                          Stage::schedule}) {
        run_stage(s, cb);
    }
    set_max_threads(0);
    for (const auto& name : kSidecars) {
        ASSERT_TRUE(std::filesystem::exists(ca.output_dir / name)) << name;
        EXPECT_EQ(hash_file(ca.output_dir / name), hash_file(cb.output_dir / name)) << name;
    }

    const auto manifest = read_json(ca.output_dir / "manifest.json");
    EXPECT_EQ(manifest.at("stages").size(), 7u);
    const auto& sel = manifest.at("stages").at("select").at("counts");
    EXPECT_EQ(sel.at("pool").get<int>(), 3 * 6 * 10);
    EXPECT_GE(sel.at("pool").get<int>(), sel.at("feasible").get<int>());
    EXPECT_GE(sel.at("feasible").get<int>(), sel.at("nms").get<int>());
    EXPECT_GE(sel.at("nms").get<int>(), sel.at("gated").get<int>());
    EXPECT_GE(sel.at("gated").get<int>(), sel.at("final").get<int>());
    EXPECT_LE(sel.at("final").get<int>(), 20);

    std::ifstream batches(ca.output_dir / "batches.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(batches, line)) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_EQ(j.at("inputs").size(), 4u);
        EXPECT_EQ(j.at("targets").size(), 2u);
        ++lines;
    }
    EXPECT_EQ(lines, 500);

    const auto freeviews = read_json(ca.output_dir / "freeviews.json");
    for (const auto& r : freeviews) {
        const std::string status = r.at("status");
        if (status != "selected" && status != "rectified_then_selected") continue;
        EXPECT_LT(r.at("quality").at("quality_score").get<double>(), 0.5);
        EXPECT_GT(r.at("quality").at("depth_range_score").get<double>(), 0.1);
        EXPECT_TRUE(std::filesystem::exists(ca.output_dir / r.at("color_path").get<std::string>()));
        EXPECT_TRUE(std::filesystem::exists(ca.output_dir / r.at("depth_path").get<std::string>()));
    }
}

TEST(Pipeline, MissingPrerequisiteNamesFile) {
    TempDir dir("pipe_missing");
    const PipelineConfig c = small_config(dir.path());
    run_stage(Stage::grid, c);
    run_stage(Stage::candidates, c);
    try {
        run_stage(Stage::select, c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingPrerequisite);
        EXPECT_NE(std::string(e.what()).find("graph.json"), std::string::npos);
    }
    EXPECT_FALSE(std::filesystem::exists(c.output_dir / "freeviews.json"));
}
