#include "oracles.hpp"

#include "viewforge/training_feeds.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace vft;

namespace {

std::vector<PseudoGtCandidate> random_candidates(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<PseudoGtCandidate> out;
    for (int i = 0; i < n; ++i) out.push_back({100 + i, u(rng), 0.5 * u(rng)});
    return out;
}

} // namespace

TEST(Schedule, ExhaustionSplitsEvents) {
    const auto cands = random_candidates(7, 1);
    const PseudoGtSchedule s = build_pseudo_gt_schedule(cands, PseudoGtConfig{});
    ASSERT_EQ(s.events.size(), 2u);
    EXPECT_EQ(s.events[0].freeview_ids.size(), 5u);
    EXPECT_EQ(s.events[1].freeview_ids.size(), 2u);
    EXPECT_EQ(s.events[0].iteration, 3000);
    EXPECT_EQ(s.events[1].iteration, 6000);
}

TEST(Schedule, ZeroOverlapFirst) {
    auto cands = random_candidates(12, 2);
    for (auto& c : cands) c.overlap += 0.1;
    cands[9].overlap = 0.0;
    const PseudoGtSchedule s = build_pseudo_gt_schedule(cands, PseudoGtConfig{});
    EXPECT_EQ(s.events[0].freeview_ids.front(), cands[9].id);
}

TEST(Schedule, WeightMap) {
    const PseudoGtConfig cfg;
    EXPECT_NEAR(cfg.weight_for(0.25), 0.4, 1e-12);
    EXPECT_NEAR(cfg.weight_for(0.0), 0.5, 1e-12);
    EXPECT_NEAR(cfg.weight_for(0.5), 0.3, 1e-12);
    EXPECT_NEAR(cfg.weight_for(2.0), 0.3, 1e-12);
}

TEST(Schedule, TwentyFiveViewsFiveEvents) {
    const auto cands = random_candidates(25, 3);
    const PseudoGtSchedule s = build_pseudo_gt_schedule(cands, PseudoGtConfig{});
    ASSERT_EQ(s.events.size(), 5u);
    std::multiset<int> seen;
    for (std::size_t e = 0; e < s.events.size(); ++e) {
        EXPECT_EQ(s.events[e].iteration, 3000 * static_cast<int>(e + 1));
        EXPECT_EQ(s.events[e].freeview_ids.size(), 5u);
        for (const double w : s.events[e].weights) {
            EXPECT_GE(w, 0.3);
            EXPECT_LE(w, 0.5);
        }
        seen.insert(s.events[e].freeview_ids.begin(), s.events[e].freeview_ids.end());
    }
    EXPECT_EQ(seen.size(), 25u);
    EXPECT_EQ(std::set<int>(seen.begin(), seen.end()).size(), 25u);
    // Event 1 = the five lowest overlaps by brute-force ranking.
    std::set<int> lowest;
    std::vector<bool> taken(cands.size(), false);
    for (int k = 0; k < 5; ++k) {
        std::size_t best = cands.size();
        for (std::size_t i = 0; i < cands.size(); ++i) {
            if (!taken[i] && (best == cands.size() || cands[i].overlap < cands[best].overlap)) best = i;
        }
        taken[best] = true;
        lowest.insert(cands[best].id);
    }
    EXPECT_EQ(std::set<int>(s.events[0].freeview_ids.begin(), s.events[0].freeview_ids.end()), lowest);
    // Overlap never decreases from one event to the next.
    for (std::size_t e = 1; e < s.events.size(); ++e) {
        double prev_max = 0.0;
        for (const int id : s.events[e - 1].freeview_ids) prev_max = std::max(prev_max, cands[id - 100].overlap);
        for (const int id : s.events[e].freeview_ids) EXPECT_GE(cands[id - 100].overlap, prev_max);
    }
}

TEST(Schedule, TotalItersCapsEvents) {
    PseudoGtConfig cfg;
    cfg.total_iters = 10000;
    const PseudoGtSchedule s = build_pseudo_gt_schedule(random_candidates(40, 4), cfg);
    EXPECT_EQ(s.events.size(), 3u);
    EXPECT_EQ(s.events.back().iteration, 9000);
}

TEST(Schedule, FromRecordsUsesMaxOverTraining) {
    ViewGraph g(0.0);
    g.add_node(0, PoseKind::training, 1.0);
    g.add_node(1, PoseKind::training, 1.0);
    for (int id = 10; id < 14; ++id) g.add_node(id, PoseKind::candidate, 1.0);
    // max overlaps: 10 -> 0.6, 11 -> 0.2, 12 -> 0.9, 13 -> 0.1 (not selected)
    g.set_edge(10, 0, 0.6);
    g.set_edge(10, 1, 0.1);
    g.set_edge(11, 0, 0.2);
    g.set_edge(12, 1, 0.9);
    g.set_edge(13, 0, 0.1);
    std::vector<FreeViewRecord> records;
    for (int id = 10; id < 14; ++id) {
        FreeViewRecord r;
        r.candidate.pose.id = id;
        r.status = id == 13 ? FreeViewStatus::rejected_quality : FreeViewStatus::selected;
        r.quality = QualityReport{0.0, 1.0, 0.25, true};
        records.push_back(r);
    }
    PseudoGtConfig cfg;
    cfg.per_event = 2;
    const std::vector<int> training = {0, 1};
    const PseudoGtSchedule s = build_pseudo_gt_schedule(g, training, records, cfg);
    ASSERT_EQ(s.events.size(), 2u);
    EXPECT_EQ(s.events[0].freeview_ids, (std::vector<int>{11, 10}));
    EXPECT_EQ(s.events[1].freeview_ids, (std::vector<int>{12}));
    EXPECT_NEAR(s.events[0].weights[0], 0.4, 1e-12);

    TempDir dir("schedule");
    write_schedule_json(s, cfg, dir / "schedule.json");
    const PseudoGtSchedule back = read_schedule_json(dir / "schedule.json");
    ASSERT_EQ(back.events.size(), s.events.size());
    for (std::size_t e = 0; e < s.events.size(); ++e) {
        EXPECT_EQ(back.events[e].iteration, s.events[e].iteration);
        EXPECT_EQ(back.events[e].freeview_ids, s.events[e].freeview_ids);
        EXPECT_EQ(back.events[e].weights, s.events[e].weights);
    }
}
