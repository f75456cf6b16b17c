#include "viewforge/view_graph.hpp"

#include "json_util.hpp"
#include "viewforge/error.hpp"
#include "viewforge/parallel.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

namespace viewforge {

double VisibilityVector::total() const {
    double sum = 0.0;
    for (const auto& e : entries) sum += e.weight;
    return sum;
}

namespace {

/// Compact cell positions (indices into grid.cells()) visible from `pose`.
std::vector<std::uint32_t> visible_cells(const CameraPose& pose, const CertaintyGrid& grid) {
    std::vector<std::uint32_t> out;
    const Mat3 w2c = pose.world_to_camera();
    const auto cells = grid.cells();
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const Vec3 p = w2c * grid.voxel_center(cells[k].index) + pose.translation;
        const double z = p.z();
        if (!(z > pose.near && z < pose.far)) continue;
        const double u = pose.fx * p.x() / z + pose.cx;
        const double v = pose.fy * p.y() / z + pose.cy;
        if (u >= 0.0 && u < pose.width && v >= 0.0 && v < pose.height) out.push_back(static_cast<std::uint32_t>(k));
    }
    return out;
}

VisibilityVector to_vector(const std::vector<std::uint32_t>& visible, const CertaintyGrid& grid) {
    VisibilityVector vis;
    vis.entries.reserve(visible.size());
    for (const std::uint32_t k : visible) vis.entries.push_back({grid.cells()[k].index, grid.cells()[k].certainty});
    return vis;
}

} // namespace

VisibilityVector compute_visibility(const CameraPose& pose, const CertaintyGrid& grid) {
    return to_vector(visible_cells(pose, grid), grid);
}

double wiou(const VisibilityVector& a, const VisibilityVector& b) {
    double num = 0.0;
    double den = 0.0;
    auto ia = a.entries.begin();
    auto ib = b.entries.begin();
    while (ia != a.entries.end() || ib != b.entries.end()) {
        if (ib == b.entries.end() || (ia != a.entries.end() && ia->voxel < ib->voxel)) {
            den += ia->weight;
            ++ia;
        } else if (ia == a.entries.end() || ib->voxel < ia->voxel) {
            den += ib->weight;
            ++ib;
        } else {
            num += std::min(ia->weight, ib->weight);
            den += std::max(ia->weight, ib->weight);
            ++ia;
            ++ib;
        }
    }
    return den > 0.0 ? num / den : 0.0;
}

std::size_t ViewGraph::add_node(int id, PoseKind kind, double score, VisibilityVector visibility) {
    if (index_.contains(id)) throw Error(ErrorCode::InvalidArgument, "duplicate graph node " + std::to_string(id));
    index_[id] = nodes_.size();
    nodes_.push_back({id, kind, score, std::move(visibility)});
    adjacency_.emplace_back();
    overlap_.clear();
    return nodes_.size() - 1;
}

void ViewGraph::set_edge(int a, int b, double value) {
    if (a == b || value < edge_cutoff_) return;
    auto insert = [&](int from, int to) {
        auto& list = adjacency_[index_of(from)];
        const auto it = std::lower_bound(list.begin(), list.end(), to,
                                         [](const std::pair<int, double>& e, int id) { return e.first < id; });
        if (it != list.end() && it->first == to) {
            it->second = value;
        } else {
            list.insert(it, {to, value});
        }
    };
    insert(a, b);
    insert(b, a);
}

const GraphNode& ViewGraph::node(int id) const { return nodes_[index_of(id)]; }

std::size_t ViewGraph::index_of(int id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::InvalidArgument, "no graph node with id " + std::to_string(id));
    return it->second;
}

std::vector<GraphEdge> ViewGraph::edges() const {
    std::vector<GraphEdge> out;
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
        const int id = nodes_[n].id;
        for (const auto& [other, w] : adjacency_[n]) {
            if (id < other) out.push_back({id, other, w});
        }
    }
    std::sort(out.begin(), out.end(), [](const GraphEdge& l, const GraphEdge& r) {
        return l.i != r.i ? l.i < r.i : l.j < r.j;
    });
    return out;
}

std::size_t ViewGraph::edge_count() const {
    std::size_t n = 0;
    for (const auto& list : adjacency_) n += list.size();
    return n / 2;
}

const std::vector<std::pair<int, double>>& ViewGraph::neighbors(int id) const { return adjacency_[index_of(id)]; }

double ViewGraph::stored_wiou(int a, int b) const {
    if (a == b) return nodes_[index_of(a)].score > 0.0 ? 1.0 : 0.0;
    const auto& list = adjacency_[index_of(a)];
    const auto it = std::lower_bound(list.begin(), list.end(), b,
                                     [](const std::pair<int, double>& e, int id) { return e.first < id; });
    return it != list.end() && it->first == b ? it->second : 0.0;
}

double ViewGraph::wiou(int a, int b) const {
    const std::size_t ia = index_of(a);
    const std::size_t ib = index_of(b);
    if (a == b) return nodes_[ia].score > 0.0 ? 1.0 : 0.0;
    if (!overlap_.empty()) {
        const double inter = overlap_[ia * nodes_.size() + ib];
        const double uni = nodes_[ia].score + nodes_[ib].score - inter;
        return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
    }
    if (!nodes_[ia].visibility.empty() || !nodes_[ib].visibility.empty()) {
        return viewforge::wiou(nodes_[ia].visibility, nodes_[ib].visibility);
    }
    return stored_wiou(a, b);
}

void ViewGraph::set_overlap_cache(std::vector<double> intersections) {
    if (intersections.size() != nodes_.size() * nodes_.size()) {
        throw Error(ErrorCode::InvalidArgument, "overlap cache must be N x N");
    }
    overlap_ = std::move(intersections);
}

ViewGraph ViewGraph::subgraph(std::span<const int> ids) const {
    ViewGraph out(edge_cutoff_);
    for (const int id : ids) {
        const auto& n = node(id);
        out.add_node(n.id, n.kind, n.score, n.visibility);
    }
    for (const int id : ids) {
        for (const auto& [other, w] : neighbors(id)) {
            if (id < other && out.contains(other)) out.set_edge(id, other, w);
        }
    }
    if (!overlap_.empty()) {
        std::vector<double> sub(ids.size() * ids.size());
        for (std::size_t r = 0; r < ids.size(); ++r) {
            for (std::size_t c = 0; c < ids.size(); ++c) {
                sub[r * ids.size() + c] = overlap_[index_of(ids[r]) * nodes_.size() + index_of(ids[c])];
            }
        }
        out.set_overlap_cache(std::move(sub));
    }
    return out;
}

namespace {

constexpr std::size_t kMaxDenseNodes = 8192;
constexpr std::size_t kVoxelChunk = 1024;
constexpr std::size_t kNodeTile = 128;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Interleaves the low 10 bits of x, y, z.
std::uint64_t morton3(std::uint64_t x, std::uint64_t y, std::uint64_t z) {
    std::uint64_t key = 0;
    for (int bit = 0; bit < 10; ++bit) {
        key |= ((x >> bit) & 1ULL) << (3 * bit + 2);
        key |= ((y >> bit) & 1ULL) << (3 * bit + 1);
        key |= ((z >> bit) & 1ULL) << (3 * bit);
    }
    return key;
}

/// Weighted intersections for every node pair: sum_k C_k [k in a][k in b],
/// accumulated as (weights x masks^T) over voxel chunks. Voxels are visited in
/// Morton order of 8^3 blocks so a chunk is spatially compact, and each chunk
/// only multiplies the nodes that see part of it. Each output tile is owned by
/// one worker per chunk, so results do not depend on thread count.
std::vector<double> pairwise_intersections(const std::vector<std::vector<std::uint32_t>>& visible,
                                           const CertaintyGrid& grid) {
    const std::size_t n = visible.size();
    const std::size_t voxels = grid.occupied();
    std::vector<double> out(n * n, 0.0);

    std::vector<std::uint64_t> block_key(voxels);
    for (std::size_t k = 0; k < voxels; ++k) {
        const VoxelCoord v = grid.coord(grid.cells()[k].index);
        block_key[k] = morton3(v[0] / 8, v[1] / 8, v[2] / 8);
    }
    std::vector<std::uint32_t> order(voxels);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return block_key[a] < block_key[b]; });
    std::vector<std::uint32_t> rank(voxels);
    for (std::size_t k = 0; k < voxels; ++k) rank[order[k]] = static_cast<std::uint32_t>(k);

    std::vector<std::vector<std::uint32_t>> reordered(n);
    parallel_for_dynamic(0, n, [&](std::size_t r) {
        auto& cells = reordered[r];
        cells.reserve(visible[r].size());
        for (const std::uint32_t c : visible[r]) cells.push_back(rank[c]);
        std::sort(cells.begin(), cells.end());
    });

    std::vector<std::size_t> cursor(n, 0);
    std::vector<std::size_t> active;
    RowMatrix weights;
    RowMatrix masks;
    std::vector<std::pair<std::size_t, std::size_t>> tile_pairs;
    for (std::size_t start = 0; start < voxels; start += kVoxelChunk) {
        const std::size_t stop = std::min(voxels, start + kVoxelChunk);
        const std::size_t width = stop - start;
        active.clear();
        for (std::size_t r = 0; r < n; ++r) {
            const auto& cells = reordered[r];
            if (cursor[r] < cells.size() && cells[cursor[r]] < stop) active.push_back(r);
        }
        const std::size_t m = active.size();
        if (m == 0) continue;
        weights.setZero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(width));
        masks.setZero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(width));
        for (std::size_t a = 0; a < m; ++a) {
            const std::size_t r = active[a];
            const auto& cells = reordered[r];
            std::size_t& c = cursor[r];
            for (; c < cells.size() && cells[c] < stop; ++c) {
                weights(a, cells[c] - start) = grid.cells()[order[cells[c]]].certainty;
                masks(a, cells[c] - start) = 1.0;
            }
        }
        const std::size_t tiles = (m + kNodeTile - 1) / kNodeTile;
        tile_pairs.clear();
        for (std::size_t a = 0; a < tiles; ++a) {
            for (std::size_t b = a; b < tiles; ++b) tile_pairs.emplace_back(a, b);
        }
        parallel_for_dynamic(0, tile_pairs.size(), [&](std::size_t p) {
            const auto [ta, tb] = tile_pairs[p];
            const std::size_t a0 = ta * kNodeTile;
            const std::size_t b0 = tb * kNodeTile;
            const std::size_t na = std::min(kNodeTile, m - a0);
            const std::size_t nb = std::min(kNodeTile, m - b0);
            const RowMatrix block = weights.middleRows(a0, na) * masks.middleRows(b0, nb).transpose();
            for (std::size_t i = 0; i < na; ++i) {
                const std::size_t row = active[a0 + i] * n;
                for (std::size_t j = 0; j < nb; ++j) out[row + active[b0 + j]] += block(i, j);
            }
        });
    }
    // Mirror the upper triangle so (i, j) and (j, i) agree bit for bit.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) out[i * n + j] = out[j * n + i];
    }
    return out;
}

} // namespace

ViewGraph build_view_graph(const std::vector<CameraPose>& poses, const CertaintyGrid& grid, double edge_cutoff) {
    if (poses.empty()) throw Error(ErrorCode::InvalidArgument, "view graph needs at least one pose");
    if (grid.empty()) throw Error(ErrorCode::EmptyGrid, "view graph needs a non-empty certainty grid");

    std::vector<std::vector<std::uint32_t>> visible(poses.size());
    parallel_for_dynamic(0, poses.size(), [&](std::size_t i) { visible[i] = visible_cells(poses[i], grid); });

    ViewGraph graph(edge_cutoff);
    for (std::size_t i = 0; i < poses.size(); ++i) {
        VisibilityVector vis = to_vector(visible[i], grid);
        const double score = vis.total();
        graph.add_node(poses[i].id, poses[i].kind, score, std::move(vis));
    }

    const std::size_t n = poses.size();
    std::vector<std::vector<std::pair<int, double>>> row_edges(n);
    if (n <= kMaxDenseNodes) {
        graph.set_overlap_cache(pairwise_intersections(visible, grid));
    }
    parallel_for_dynamic(0, n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = graph.wiou(poses[i].id, poses[j].id);
            if (w >= edge_cutoff) row_edges[i].emplace_back(poses[j].id, w);
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& [other, w] : row_edges[i]) graph.set_edge(poses[i].id, other, w);
    }
    return graph;
}

namespace {

template <typename Row>
int select_reference_impl(const ViewGraph& graph, Row&& row_wiou, std::span<const int> training_ids,
                          const std::vector<std::pair<int, double>>& first_hop) {
    if (training_ids.empty()) throw Error(ErrorCode::InvalidArgument, "reference selection needs training ids");
    int best = std::numeric_limits<int>::max();
    double best_value = -1.0;
    for (const int t : training_ids) {
        const double w = row_wiou(t);
        if (w > best_value || (w == best_value && t < best)) {
            best = t;
            best_value = w;
        }
    }
    if (best_value >= graph.edge_cutoff() && best_value > 0.0) return best;

    std::vector<int> sorted_training(training_ids.begin(), training_ids.end());
    std::sort(sorted_training.begin(), sorted_training.end());
    best = std::numeric_limits<int>::max();
    best_value = 0.0;
    for (const auto& [mid, w_first] : first_hop) {
        if (w_first < graph.edge_cutoff()) continue;
        for (const auto& [t, w_second] : graph.neighbors(mid)) {
            if (!std::binary_search(sorted_training.begin(), sorted_training.end(), t)) continue;
            const double bottleneck = std::min(w_first, w_second);
            if (bottleneck > best_value || (bottleneck == best_value && t < best)) {
                best = t;
                best_value = bottleneck;
            }
        }
    }
    if (best_value > 0.0) return best;
    throw Error(ErrorCode::NoReferenceAvailable, "no training view reachable within two hops");
}

} // namespace

int select_reference(const ViewGraph& graph, int target, std::span<const int> training_ids) {
    if (graph.node(target).score <= 0.0) {
        throw Error(ErrorCode::NoReferenceAvailable, "view " + std::to_string(target) + " sees no certainty");
    }
    std::vector<std::pair<int, double>> first_hop;
    for (const auto& [mid, w] : graph.neighbors(target)) first_hop.emplace_back(mid, graph.wiou(target, mid));
    return select_reference_impl(
        graph, [&](int t) { return t == target ? -1.0 : graph.wiou(target, t); }, training_ids, first_hop);
}

int select_reference(const ViewGraph& graph, const VisibilityVector& target, std::span<const int> training_ids) {
    if (target.empty()) throw Error(ErrorCode::NoReferenceAvailable, "view sees no certainty");
    std::vector<std::pair<int, double>> first_hop;
    for (const auto& n : graph.nodes()) {
        const double w = wiou(target, n.visibility);
        if (w >= graph.edge_cutoff() && w > 0.0) first_hop.emplace_back(n.id, w);
    }
    return select_reference_impl(
        graph, [&](int t) { return wiou(target, graph.node(t).visibility); }, training_ids, first_hop);
}

void write_graph_json(const ViewGraph& graph, const std::filesystem::path& path) {
    using detail::json;
    json nodes = json::array();
    for (const auto& n : graph.nodes()) {
        nodes.push_back({{"id", n.id}, {"kind", std::string(to_string(n.kind))}, {"score", n.score}});
    }
    json edges = json::array();
    for (const auto& e : graph.edges()) edges.push_back({{"i", e.i}, {"j", e.j}, {"wiou", e.wiou}});
    json doc{{"edge_cutoff", graph.edge_cutoff()}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
    detail::write_json_file(doc, path, -1);
}

ViewGraph read_graph_json(const std::filesystem::path& path) {
    const auto doc = detail::read_json_file(path);
    try {
        ViewGraph graph(doc.at("edge_cutoff").get<double>());
        for (const auto& n : doc.at("nodes")) {
            graph.add_node(n.at("id").get<int>(), pose_kind_from_string(n.at("kind").get<std::string>()),
                           n.at("score").get<double>());
        }
        for (const auto& e : doc.at("edges")) {
            graph.set_edge(e.at("i").get<int>(), e.at("j").get<int>(), e.at("wiou").get<double>());
        }
        return graph;
    } catch (const detail::json::exception& e) {
        throw Error(ErrorCode::MalformedFile, path.string() + ": " + e.what());
    }
}

void write_graph_dot(const ViewGraph& graph, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << "graph views {\n  node [fontsize=10];\n";
    for (const auto& n : graph.nodes()) {
        out << "  n" << n.id << " [label=\"" << n.id << "\""
            << (n.kind == PoseKind::training ? ", shape=box, style=filled, fillcolor=lightblue" : "") << "];\n";
    }
    char label[32];
    for (const auto& e : graph.edges()) {
        std::snprintf(label, sizeof(label), "%.2f", e.wiou);
        out << "  n" << e.i << " -- n" << e.j << " [label=\"" << label << "\"];\n";
    }
    out << "}\n";
}

} // namespace viewforge
