#pragma once

#include "viewforge/certainty_grid.hpp"
#include "viewforge/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace viewforge {

struct VisEntry {
    std::uint64_t voxel;  ///< linear voxel index in the certainty grid
    double weight;
};

/// Sparse weighted visibility W_{i,k}, sorted by voxel index. Built from a
/// grid every stored weight equals that voxel's certainty.
struct VisibilityVector {
    std::vector<VisEntry> entries;

    bool empty() const noexcept { return entries.empty(); }
    std::size_t size() const noexcept { return entries.size(); }
    /// Node score f: sum of weights.
    double total() const;
};

/// A voxel is visible when its center lies strictly between the near and far
/// planes and projects inside [0, W) x [0, H). No occlusion test.
VisibilityVector compute_visibility(const CameraPose& pose, const CertaintyGrid& grid);

/// Weighted IoU: sum of per-voxel minima over sum of maxima; 0 for two
/// empty vectors.
double wiou(const VisibilityVector& a, const VisibilityVector& b);

struct GraphNode {
    int id = 0;
    PoseKind kind = PoseKind::training;
    double score = 0.0;
    VisibilityVector visibility;
};

struct GraphEdge {
    int i = 0;  ///< smaller node id
    int j = 0;
    double wiou = 0.0;
};

/// Nodes keyed by pose id; edges stored only when WIoU >= edge_cutoff.
/// `wiou()` is exact whenever visibility is available (dense pairwise
/// overlap cache, else sparse merge) and falls back to stored edges for
/// graphs read from disk or assembled by hand.
class ViewGraph {
public:
    explicit ViewGraph(double edge_cutoff = 0.05) : edge_cutoff_(edge_cutoff) {}

    std::size_t add_node(int id, PoseKind kind, double score, VisibilityVector visibility = {});
    /// Stores the symmetric edge when `value >= edge_cutoff`.
    void set_edge(int a, int b, double value);

    double edge_cutoff() const noexcept { return edge_cutoff_; }
    std::span<const GraphNode> nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    bool contains(int id) const { return index_.contains(id); }
    const GraphNode& node(int id) const;
    std::size_t index_of(int id) const;

    /// Stored edges with i < j, ordered by (i, j).
    std::vector<GraphEdge> edges() const;
    std::size_t edge_count() const;
    /// Stored neighbors of a node as (neighbor id, WIoU), ordered by id.
    const std::vector<std::pair<int, double>>& neighbors(int id) const;

    /// Stored edge value; 1 for a node with itself when its score is positive,
    /// 0 for absent edges.
    double stored_wiou(int a, int b) const;
    /// Exact WIoU when both nodes carry visibility, else stored_wiou.
    double wiou(int a, int b) const;

    /// Installs a dense N x N table of weighted intersections sum_k min(W_a, W_b)
    /// in node order; enables O(1) exact wiou().
    void set_overlap_cache(std::vector<double> intersections);
    bool has_overlap_cache() const noexcept { return !overlap_.empty(); }

    /// Copy restricted to the given ids (edges between them kept).
    ViewGraph subgraph(std::span<const int> ids) const;

private:
    double edge_cutoff_;
    std::vector<GraphNode> nodes_;
    std::unordered_map<int, std::size_t> index_;
    std::vector<std::vector<std::pair<int, double>>> adjacency_;
    std::vector<double> overlap_;
};

/// One node per pose (visibility + score), every pair evaluated exactly.
ViewGraph build_view_graph(const std::vector<CameraPose>& poses, const CertaintyGrid& grid, double edge_cutoff = 0.05);

/// Training node with the highest WIoU to `target`; if that is below the
/// edge cutoff, the training node reachable through the best two-hop
/// bottleneck max_m min(WIoU(target, m), WIoU(m, t)) over stored edges.
/// Ties go to the lower id. Throws NoReferenceAvailable.
int select_reference(const ViewGraph& graph, int target, std::span<const int> training_ids);

/// Same rule for a pose that is not a graph node (e.g. a rectified view),
/// given its visibility vector. Needs node visibility in the graph.
int select_reference(const ViewGraph& graph, const VisibilityVector& target, std::span<const int> training_ids);

void write_graph_json(const ViewGraph& graph, const std::filesystem::path& path);
ViewGraph read_graph_json(const std::filesystem::path& path);
/// Graphviz view; edge labels carry WIoU with two decimals.
void write_graph_dot(const ViewGraph& graph, const std::filesystem::path& path);

} // namespace viewforge
