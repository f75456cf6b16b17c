#include "viewforge/certainty_grid.hpp"
#include "viewforge/renderer.hpp"
#include "viewforge/scene_io.hpp"
#include "viewforge/selector.hpp"
#include "viewforge/ssim.hpp"
#include "viewforge/synthetic.hpp"
#include "viewforge/trajectory.hpp"
#include "viewforge/view_graph.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <random>

using namespace viewforge;

namespace {

const SyntheticRoom& room(int primitives) {
    static std::map<int, SyntheticRoom> cache;
    auto it = cache.find(primitives);
    if (it == cache.end()) {
        SyntheticRoomOptions opts;
        opts.num_primitives = primitives;
        it = cache.emplace(primitives, make_synthetic_room(opts)).first;
    }
    return it->second;
}

void BM_CertaintyGrid(benchmark::State& state) {
    const auto& r = room(static_cast<int>(state.range(0)));
    const SceneBounds bounds = compute_bounds(r.scene);
    for (auto _ : state) benchmark::DoNotOptimize(build_certainty_grid(r.scene, bounds, 128));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(r.scene.size()));
}
BENCHMARK(BM_CertaintyGrid)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_Visibility(benchmark::State& state) {
    const auto& r = room(20000);
    const CertaintyGrid grid = build_certainty_grid(r.scene, compute_bounds(r.scene), 128);
    for (auto _ : state) benchmark::DoNotOptimize(compute_visibility(r.cameras[0], grid));
}
BENCHMARK(BM_Visibility)->Unit(benchmark::kMicrosecond);

void BM_ViewGraph(benchmark::State& state) {
    const auto& r = room(20000);
    const CertaintyGrid grid = build_certainty_grid(r.scene, compute_bounds(r.scene), 64);
    PlacementConfig placement;
    placement.num_anchors = static_cast<int>(state.range(0));
    const auto pool = generate_candidate_pool(r.cameras, grid, placement);
    std::vector<CameraPose> poses = r.cameras;
    for (const auto& c : pool) poses.push_back(c.pose);
    for (auto _ : state) benchmark::DoNotOptimize(build_view_graph(poses, grid));
    state.counters["nodes"] = static_cast<double>(poses.size());
}
BENCHMARK(BM_ViewGraph)->Arg(2)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_Render(benchmark::State& state) {
    const auto& r = room(static_cast<int>(state.range(0)));
    const SplatRenderer renderer(r.scene);
    const CameraPose pose = r.cameras[0].resized(256, 192);
    for (auto _ : state) benchmark::DoNotOptimize(renderer.render(pose));
}
BENCHMARK(BM_Render)->Arg(200)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_Nms(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ViewGraph g(0.05);
    std::vector<int> ids;
    for (int i = 0; i < n; ++i) {
        g.add_node(i, PoseKind::candidate, u(rng));
        ids.push_back(i);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) g.set_edge(i, j, u(rng) * 0.8);
    }
    SelectorConfig config;
    for (auto _ : state) benchmark::DoNotOptimize(nms_select(g, {}, ids, config));
}
BENCHMARK(BM_Nms)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image a(256, 192, 3);
    Image b(256, 192, 3);
    for (double& v : a.data) v = u(rng);
    for (double& v : b.data) v = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
