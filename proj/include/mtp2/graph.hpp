#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "mtp2/errors.hpp"
#include "mtp2/matrix.hpp"

namespace mtp2 {

using Edge = std::pair<int, int>;

/// Sparse symmetric matrix with zero diagonal, stored as a sorted coordinate
/// list over the upper triangle (i < j). Entries produced by the soft
/// threshold of the covariance are strictly positive; the sign-aware
/// graphical-lasso variant may store negative values.
class ThresholdedMatrix {
public:
    struct Entry {
        int i;
        int j;
        double value;
    };

    ThresholdedMatrix() = default;

    ThresholdedMatrix(int p, std::vector<Entry> entries) : p_(p), entries_(std::move(entries)) {
        if (p < 1) throw std::invalid_argument("ThresholdedMatrix: dimension must be >= 1");
        for (auto& e : entries_) {
            if (e.i == e.j || e.i < 0 || e.j < 0 || e.i >= p || e.j >= p)
                throw std::invalid_argument("ThresholdedMatrix: bad entry index");
            if (e.i > e.j) std::swap(e.i, e.j);
        }
        std::sort(entries_.begin(), entries_.end(),
                  [](const Entry& a, const Entry& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
        for (std::size_t k = 1; k < entries_.size(); ++k)
            if (entries_[k - 1].i == entries_[k].i && entries_[k - 1].j == entries_[k].j)
                throw std::invalid_argument("ThresholdedMatrix: duplicate entry");
    }

    int dim() const { return p_; }
    const std::vector<Entry>& entries() const { return entries_; }

    /// T_ij, or 0 when the pair is not stored.
    double value(int i, int j) const {
        if (i == j) return 0.0;
        if (i > j) std::swap(i, j);
        auto it = std::lower_bound(entries_.begin(), entries_.end(), std::make_pair(i, j),
                                   [](const Entry& e, const std::pair<int, int>& q) {
                                       return std::tie(e.i, e.j) < std::tie(q.first, q.second);
                                   });
        if (it != entries_.end() && it->i == i && it->j == j) return it->value;
        return 0.0;
    }

private:
    int p_ = 0;
    std::vector<Entry> entries_;
};

/// Soft threshold of the sample covariance:
///   T_ij = S_ij - Lambda_ij  when i != j and S_ij > Lambda_ij, else 0.
/// Ties produce no entry. Fails when some S_ij reaches sqrt(S_ii*S_jj),
/// since then the estimation problem loses its unique minimizer.
inline ThresholdedMatrix threshold(const SymmetricMatrix& s, const SymmetricMatrix& lam) {
    const int p = s.dim();
    if (lam.dim() != p) throw std::invalid_argument("threshold: dimension mismatch");
    for (int i = 0; i < p; ++i) {
        if (!(s(i, i) > 0.0)) throw AssumptionViolated(i, i);
        if (lam(i, i) != 0.0) throw std::invalid_argument("threshold: Lambda diagonal must be zero");
    }
    std::vector<ThresholdedMatrix::Entry> entries;
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            if (lam(i, j) < 0.0) throw std::invalid_argument("threshold: Lambda must be non-negative");
            if (s(i, j) >= std::sqrt(s(i, i) * s(j, j))) throw AssumptionViolated(i, j);
            if (s(i, j) > lam(i, j)) entries.push_back({i, j, s(i, j) - lam(i, j)});
        }
    }
    return ThresholdedMatrix(p, std::move(entries));
}

/// Simple undirected graph: no self-loops, no duplicate edges.
class UndirectedGraph {
public:
    struct Arc {
        int to;
        int edge;
    };

    UndirectedGraph() = default;

    UndirectedGraph(int p, std::vector<Edge> edges) : p_(p), edges_(std::move(edges)) {
        if (p < 0) throw std::invalid_argument("UndirectedGraph: negative vertex count");
        for (auto& e : edges_) {
            if (e.first == e.second) throw std::invalid_argument("UndirectedGraph: self-loop");
            if (e.first < 0 || e.second < 0 || e.first >= p || e.second >= p)
                throw std::invalid_argument("UndirectedGraph: vertex out of range");
            if (e.first > e.second) std::swap(e.first, e.second);
        }
        std::sort(edges_.begin(), edges_.end());
        edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
        adj_.assign(p_, {});
        for (int id = 0; id < static_cast<int>(edges_.size()); ++id) {
            adj_[edges_[id].first].push_back({edges_[id].second, id});
            adj_[edges_[id].second].push_back({edges_[id].first, id});
        }
    }

    int vertex_count() const { return p_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<Edge>& edges() const { return edges_; }
    const std::vector<Arc>& arcs(int v) const { return adj_[v]; }

    std::vector<int> neighbors(int v) const {
        std::vector<int> out;
        out.reserve(adj_[v].size());
        for (const Arc& a : adj_[v]) out.push_back(a.to);
        return out;
    }

private:
    int p_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::vector<Arc>> adj_;
};

inline UndirectedGraph support_graph(const ThresholdedMatrix& t) {
    std::vector<Edge> edges;
    edges.reserve(t.entries().size());
    for (const auto& e : t.entries()) edges.emplace_back(e.i, e.j);
    return UndirectedGraph(t.dim(), std::move(edges));
}

/// Bridges of G: edges whose removal increases the component count. One
/// iterative DFS pass (Tarjan low-link); recursion is avoided so that graphs
/// with 1e5+ vertices do not overflow the stack. Output is sorted.
inline std::vector<Edge> find_bridges(const UndirectedGraph& g) {
    const int p = g.vertex_count();
    std::vector<int> tin(p, -1), low(p, -1);
    std::vector<Edge> bridges;
    int timer = 0;

    struct Frame {
        int v;
        int parent_edge;
        std::size_t next;
    };
    std::vector<Frame> stack;

    for (int root = 0; root < p; ++root) {
        if (tin[root] != -1) continue;
        stack.push_back({root, -1, 0});
        tin[root] = low[root] = timer++;
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < g.arcs(f.v).size()) {
                const auto& arc = g.arcs(f.v)[f.next++];
                if (arc.edge == f.parent_edge) continue;
                if (tin[arc.to] == -1) {
                    tin[arc.to] = low[arc.to] = timer++;
                    stack.push_back({arc.to, arc.edge, 0});
                } else {
                    low[f.v] = std::min(low[f.v], tin[arc.to]);
                }
            } else {
                const Frame done = f;
                stack.pop_back();
                if (!stack.empty()) {
                    Frame& parent = stack.back();
                    low[parent.v] = std::min(low[parent.v], low[done.v]);
                    if (low[done.v] > tin[parent.v]) bridges.push_back(g.edges()[done.parent_edge]);
                }
            }
        }
    }
    std::sort(bridges.begin(), bridges.end());
    return bridges;
}

/// Component label per vertex; labels are assigned in order of first visit.
inline std::vector<int> connected_components(const UndirectedGraph& g) {
    const int p = g.vertex_count();
    std::vector<int> label(p, -1);
    int count = 0;
    std::vector<int> queue;
    for (int root = 0; root < p; ++root) {
        if (label[root] != -1) continue;
        label[root] = count;
        queue.assign(1, root);
        while (!queue.empty()) {
            int v = queue.back();
            queue.pop_back();
            for (const auto& arc : g.arcs(v)) {
                if (label[arc.to] == -1) {
                    label[arc.to] = count;
                    queue.push_back(arc.to);
                }
            }
        }
        ++count;
    }
    return label;
}

/// Vertex partition into the connected components of (V, E \ B), together
/// with the global-to-cluster map psi, the global-to-local map pi, and the
/// bridge set itself.
struct BridgeBlockPartition {
    std::vector<std::vector<int>> clusters;  // each sorted; ordered by smallest member
    std::vector<int> psi;                    // vertex -> cluster index
    std::vector<int> pi;                     // vertex -> index within its cluster
    std::vector<Edge> bridges;

    int vertex_count() const { return static_cast<int>(psi.size()); }
    int cluster_count() const { return static_cast<int>(clusters.size()); }
};

inline BridgeBlockPartition bridge_block_decomposition(const UndirectedGraph& g,
                                                       const std::vector<Edge>& bridges) {
    const int p = g.vertex_count();
    std::vector<bool> is_bridge(g.edge_count(), false);
    for (const Edge& b : bridges) {
        auto it = std::lower_bound(g.edges().begin(), g.edges().end(), b);
        if (it == g.edges().end() || *it != b)
            throw std::invalid_argument("bridge_block_decomposition: bridge not an edge of G");
        is_bridge[static_cast<std::size_t>(it - g.edges().begin())] = true;
    }

    BridgeBlockPartition part;
    part.bridges = bridges;
    std::sort(part.bridges.begin(), part.bridges.end());
    part.psi.assign(p, -1);
    part.pi.assign(p, -1);

    std::vector<int> queue;
    for (int root = 0; root < p; ++root) {
        if (part.psi[root] != -1) continue;
        const int k = part.cluster_count();
        part.clusters.emplace_back();
        part.psi[root] = k;
        queue.assign(1, root);
        while (!queue.empty()) {
            int v = queue.back();
            queue.pop_back();
            part.clusters[k].push_back(v);
            for (const auto& arc : g.arcs(v)) {
                if (is_bridge[arc.edge] || part.psi[arc.to] != -1) continue;
                part.psi[arc.to] = k;
                queue.push_back(arc.to);
            }
        }
        std::sort(part.clusters[k].begin(), part.clusters[k].end());
        for (int local = 0; local < static_cast<int>(part.clusters[k].size()); ++local)
            part.pi[part.clusters[k][local]] = local;
    }
    return part;
}

/// Ordered sequence of bridges crossed by any path between two vertices in
/// different clusters. Each bridge is oriented (exit vertex, entry vertex),
/// so psi of the entry of one bridge equals psi of the exit of the next.
struct BridgePath {
    int source = -1;
    int target = -1;
    std::vector<Edge> bridges;

    bool empty() const { return bridges.empty(); }
};

/// Forest on clusters obtained by contracting each cluster to a node and
/// keeping only the bridges. Bridge-path queries reduce to tree paths here.
class BridgeForest {
public:
    struct Hop {
        int to;       // neighbouring cluster
        int exit;     // vertex of the current cluster
        int entry;    // vertex of the neighbouring cluster
    };

    explicit BridgeForest(const BridgeBlockPartition& part) : adj_(part.cluster_count()) {
        for (const Edge& b : part.bridges) {
            const int ci = part.psi[b.first];
            const int cj = part.psi[b.second];
            if (ci == cj)
                throw std::invalid_argument("BridgeForest: bridge endpoints share a cluster");
            adj_[ci].push_back({cj, b.first, b.second});
            adj_[cj].push_back({ci, b.second, b.first});
        }
    }

    int cluster_count() const { return static_cast<int>(adj_.size()); }
    const std::vector<Hop>& hops(int cluster) const { return adj_[cluster]; }

    /// Oriented bridges along the unique forest path; empty when the clusters
    /// lie in different components.
    std::vector<Edge> path(int from_cluster, int to_cluster) const {
        if (from_cluster == to_cluster) return {};
        std::vector<int> parent(adj_.size(), -2);
        std::vector<Edge> via(adj_.size());
        parent[from_cluster] = -1;
        std::queue<int> bfs;
        bfs.push(from_cluster);
        while (!bfs.empty() && parent[to_cluster] == -2) {
            int c = bfs.front();
            bfs.pop();
            for (const Hop& h : adj_[c]) {
                if (parent[h.to] != -2) continue;
                parent[h.to] = c;
                via[h.to] = {h.exit, h.entry};
                bfs.push(h.to);
            }
        }
        if (parent[to_cluster] == -2) return {};
        std::vector<Edge> out;
        for (int c = to_cluster; parent[c] != -1; c = parent[c]) out.push_back(via[c]);
        std::reverse(out.begin(), out.end());
        return out;
    }

private:
    std::vector<std::vector<Hop>> adj_;
};

inline BridgePath bridge_path(const BridgeBlockPartition& part, const UndirectedGraph& g, int i,
                              int j) {
    if (g.vertex_count() != part.vertex_count())
        throw std::invalid_argument("bridge_path: graph/partition size mismatch");
    if (part.psi[i] == part.psi[j]) throw SameCluster(i, j);
    BridgeForest forest(part);
    BridgePath path;
    path.source = i;
    path.target = j;
    path.bridges = forest.path(part.psi[i], part.psi[j]);
    return path;
}

}  // namespace mtp2
