#include "oracles.hpp"

#include "viewforge/error.hpp"
#include "viewforge/training_feeds.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <set>

using namespace vft;

namespace {

ViewGraph random_graph(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ViewGraph g(0.05);
    for (int i = 0; i < n; ++i) g.add_node(i, PoseKind::training, 1.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) g.set_edge(i, j, u(rng));
    }
    return g;
}

std::vector<int> iota_ids(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    return v;
}

double mean_pairwise(const ViewGraph& g, const CurriculumBatch& b) {
    std::vector<int> ids = b.input_ids;
    ids.insert(ids.end(), b.target_ids.begin(), b.target_ids.end());
    double sum = 0.0;
    int n = 0;
    for (std::size_t a = 0; a < ids.size(); ++a) {
        for (std::size_t c = a + 1; c < ids.size(); ++c) {
            sum += g.wiou(ids[a], ids[c]);
            ++n;
        }
    }
    return sum / n;
}

void expect_valid(const CurriculumBatch& b, const CurriculumConfig& cfg) {
    ASSERT_EQ(static_cast<int>(b.input_ids.size()), cfg.inputs_per_batch);
    ASSERT_EQ(static_cast<int>(b.target_ids.size()), cfg.targets_per_batch);
    std::set<int> ids(b.input_ids.begin(), b.input_ids.end());
    ids.insert(b.target_ids.begin(), b.target_ids.end());
    EXPECT_EQ(static_cast<int>(ids.size()), cfg.batch_size());
}

} // namespace

TEST(Curriculum, AnnealedRange) {
    CurriculumConfig cfg;
    EXPECT_EQ(cfg.frame_distance_at(0).lo, 10);
    EXPECT_EQ(cfg.frame_distance_at(0).hi, 20);
    EXPECT_EQ(cfg.frame_distance_at(1500).lo, 13);
    EXPECT_EQ(cfg.frame_distance_at(1500).hi, 30);
    EXPECT_EQ(cfg.frame_distance_at(3000).lo, 15);
    EXPECT_EQ(cfg.frame_distance_at(3000).hi, 40);
    EXPECT_EQ(cfg.frame_distance_at(19999).hi, 40);
}

TEST(Curriculum, ChainGraphWarmupStart) {
    ViewGraph g(0.05);
    for (int i = 0; i < 6; ++i) g.add_node(i, PoseKind::training, 1.0);
    const double w[5] = {0.3, 0.9, 0.8, 0.2, 0.4};
    for (int i = 0; i < 5; ++i) g.set_edge(i, i + 1, w[i]);
    // Incident sums: 0.3, 1.2, 1.7, 1.0, 0.6, 0.4.
    CurriculumConfig cfg;
    cfg.inputs_per_batch = 2;
    cfg.targets_per_batch = 1;
    std::mt19937_64 rng(1);
    for (int k = 0; k < 20; ++k) {
        const CurriculumBatch b = sample_graph_batch(0, g, cfg, rng);
        EXPECT_EQ(b.source, BatchSource::graph);
        EXPECT_EQ(b.input_ids[0], 2);
        std::set<int> rest{b.input_ids[1], b.target_ids[0]};
        EXPECT_EQ(rest, (std::set<int>{1, 3}));
    }
}

TEST(Curriculum, WarmupTakesStrongestNeighbors) {
    const ViewGraph g = random_graph(12, 3);
    CurriculumConfig cfg;
    std::mt19937_64 rng(2);
    const CurriculumBatch b = sample_graph_batch(0, g, cfg, rng);
    const int start = b.input_ids[0];
    auto ranked = g.neighbors(start);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& c) { return a.second > c.second; });
    std::set<int> want;
    for (int k = 0; k < cfg.batch_size() - 1; ++k) want.insert(ranked[static_cast<std::size_t>(k)].first);
    std::set<int> got(b.input_ids.begin() + 1, b.input_ids.end());
    got.insert(b.target_ids.begin(), b.target_ids.end());
    EXPECT_EQ(got, want);
    // Start maximizes the incident sum.
    double best = 0.0;
    for (const auto& n : g.nodes()) {
        double s = 0.0;
        for (const auto& [id, v] : g.neighbors(n.id)) s += v;
        best = std::max(best, s);
    }
    double s = 0.0;
    for (const auto& [id, v] : g.neighbors(start)) s += v;
    EXPECT_EQ(s, best);
}

TEST(Curriculum, FrameModeRespectsBounds) {
    CurriculumConfig cfg;
    const auto seq = iota_ids(60);
    std::mt19937_64 rng(4);
    for (const int it : {0, 1000, 2000, 3000, 10000, 19999}) {
        const IntRange r = cfg.frame_distance_at(it);
        for (int k = 0; k < 500; ++k) {
            const CurriculumBatch b = sample_frame_batch(it, seq, cfg, rng);
            expect_valid(b, cfg);
            for (const int i : b.input_ids) {
                for (const int t : b.target_ids) {
                    const int d = std::abs(i - t);
                    EXPECT_GE(d, r.lo);
                    EXPECT_LE(d, r.hi);
                }
            }
        }
    }
}

TEST(Curriculum, ShortSequenceClampsOrThrows) {
    CurriculumConfig cfg;
    std::mt19937_64 rng(5);
    const auto seq = iota_ids(20);
    for (int k = 0; k < 200; ++k) {
        const CurriculumBatch b = sample_frame_batch(0, seq, cfg, rng);
        for (const int i : b.input_ids) {
            for (const int t : b.target_ids) EXPECT_GE(std::abs(i - t), 10);
        }
    }
    const auto tiny = iota_ids(12);
    try {
        sample_frame_batch(0, tiny, cfg, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientFrames);
    }
}

TEST(Curriculum, ProbabilityZeroIsFrameMode) {
    const ViewGraph g = random_graph(10, 6);
    CurriculumConfig cfg;
    cfg.graph_probability = 0.0;
    const auto seq = iota_ids(50);
    std::mt19937_64 rng(7);
    for (int k = 0; k < 300; ++k) EXPECT_EQ(sample_batch(k * 50, g, seq, cfg, rng).source, BatchSource::frame_distance);
    cfg.graph_probability = 1.0;
    for (int k = 0; k < 300; ++k) EXPECT_EQ(sample_batch(k * 50, g, seq, cfg, rng).source, BatchSource::graph);
}

TEST(Curriculum, TenThousandValidDraws) {
    const ViewGraph g = random_graph(30, 8);
    CurriculumConfig cfg;
    cfg.seed = 9;
    CurriculumSampler sampler(g, iota_ids(30), cfg);
    int graph_count = 0;
    for (int it = 0; it < 10000; ++it) {
        const CurriculumBatch b = sampler.next(it * 2);
        expect_valid(b, cfg);
        EXPECT_EQ(b.iteration, it * 2);
        if (b.source == BatchSource::graph) {
            ++graph_count;
            for (const int id : b.target_ids) EXPECT_GT(g.stored_wiou(b.input_ids[0], id), 0.0);
        }
    }
    EXPECT_NEAR(graph_count / 10000.0, 0.5, 0.03);
}

TEST(Curriculum, WarmupBatchesOverlapMore) {
    const ViewGraph g = random_graph(40, 10);
    CurriculumConfig cfg;
    std::mt19937_64 rng(11);
    double warm = 0.0;
    double late = 0.0;
    for (int k = 0; k < 1000; ++k) warm += mean_pairwise(g, sample_graph_batch(k % cfg.warmup_iters, g, cfg, rng));
    for (int k = 0; k < 1000; ++k) late += mean_pairwise(g, sample_graph_batch(cfg.warmup_iters + k * 10, g, cfg, rng));
    EXPECT_GT(warm / 1000.0, late / 1000.0);
}

TEST(Curriculum, InsufficientNeighbors) {
    ViewGraph g(0.05);
    for (int i = 0; i < 4; ++i) g.add_node(i, PoseKind::training, 1.0);
    g.set_edge(0, 1, 0.5);
    g.set_edge(1, 2, 0.5);
    std::mt19937_64 rng(12);
    try {
        sample_graph_batch(0, g, CurriculumConfig{}, rng);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientNeighbors);
    }
}

TEST(Curriculum, SeedDeterminism) {
    const ViewGraph g = random_graph(20, 13);
    CurriculumConfig cfg;
    cfg.seed = 77;
    CurriculumSampler a(g, iota_ids(50), cfg);
    CurriculumSampler b(g, iota_ids(50), cfg);
    for (int it = 0; it < 500; ++it) {
        const auto x = a.next(it * 40);
        const auto y = b.next(it * 40);
        EXPECT_EQ(x.input_ids, y.input_ids);
        EXPECT_EQ(x.target_ids, y.target_ids);
    }
}

TEST(Curriculum, ConfigValidation) {
    CurriculumConfig cfg;
    cfg.warmup_iters = 30000;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = CurriculumConfig{};
    cfg.frame_dist_full = {40, 15};
    EXPECT_THROW(cfg.validate(), Error);
}
