#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mtp2/assembler.hpp"
#include "mtp2/graph.hpp"
#include "mtp2/matrix.hpp"
#include "mtp2/parallel.hpp"
#include "mtp2/subsolver.hpp"

namespace mtp2 {

/// Arbitrary vertex partition (not necessarily bridge-block), together with
/// the external edges E_e = {(i,j) in supp(T) : psi(i) != psi(j)}.
struct VertexPartition {
    std::vector<std::vector<int>> clusters;
    std::vector<int> psi;
    std::vector<int> pi;
    std::vector<Edge> external_edges;

    int vertex_count() const { return static_cast<int>(psi.size()); }
    int cluster_count() const { return static_cast<int>(clusters.size()); }

    /// Validates that the clusters disjointly cover 0..p-1 and derives the
    /// external edge set from the thresholded support.
    static VertexPartition make(std::vector<std::vector<int>> clusters,
                                const ThresholdedMatrix& t) {
        const int p = t.dim();
        VertexPartition part;
        part.psi.assign(p, -1);
        part.pi.assign(p, -1);
        for (auto& members : clusters) std::sort(members.begin(), members.end());
        part.clusters = std::move(clusters);
        for (int k = 0; k < part.cluster_count(); ++k) {
            if (part.clusters[k].empty())
                throw PartitionMismatch("VertexPartition: empty cluster");
            for (int local = 0; local < static_cast<int>(part.clusters[k].size()); ++local) {
                const int v = part.clusters[k][local];
                if (v < 0 || v >= p) throw PartitionMismatch("VertexPartition: vertex out of range");
                if (part.psi[v] != -1) throw PartitionMismatch("VertexPartition: overlapping clusters");
                part.psi[v] = k;
                part.pi[v] = local;
            }
        }
        for (int v = 0; v < p; ++v)
            if (part.psi[v] == -1) throw PartitionMismatch("VertexPartition: uncovered vertex");
        for (const auto& e : t.entries())
            if (part.psi[e.i] != part.psi[e.j]) part.external_edges.emplace_back(e.i, e.j);
        return part;
    }

    static VertexPartition singletons(const ThresholdedMatrix& t) {
        std::vector<std::vector<int>> clusters(t.dim());
        for (int v = 0; v < t.dim(); ++v) clusters[v] = {v};
        return make(std::move(clusters), t);
    }

    static VertexPartition from_bridge_blocks(const BridgeBlockPartition& part,
                                              const ThresholdedMatrix& t) {
        return make(part.clusters, t);
    }
};

/// Sign-aware threshold used by the unconstrained graphical lasso:
///   T_ij = S_ij - Lambda_ij * sign(S_ij)  when |S_ij| > Lambda_ij, else 0.
/// Coincides with the non-negative threshold on entrywise non-negative S.
inline ThresholdedMatrix glasso_threshold(const SymmetricMatrix& s, const SymmetricMatrix& lam) {
    const int p = s.dim();
    if (lam.dim() != p) throw std::invalid_argument("glasso_threshold: dimension mismatch");
    std::vector<ThresholdedMatrix::Entry> entries;
    for (int i = 0; i < p; ++i) {
        if (lam(i, i) != 0.0)
            throw std::invalid_argument("glasso_threshold: Lambda diagonal must be zero");
        for (int j = i + 1; j < p; ++j) {
            if (lam(i, j) < 0.0)
                throw std::invalid_argument("glasso_threshold: Lambda must be non-negative");
            if (std::abs(s(i, j)) > lam(i, j))
                entries.push_back({i, j, s(i, j) - lam(i, j) * (s(i, j) > 0 ? 1.0 : -1.0)});
        }
    }
    return ThresholdedMatrix(p, std::move(entries));
}

struct GlassoConditionResult {
    bool satisfied = true;
    double worst_violation = 0.0;  // max over cross pairs of |-R_ij + S_ij| - Lambda_ij
    int i = -1;
    int j = -1;
};

/// Optimality condition under which the decomposed form also solves the
/// unconstrained graphical lasso: |-R_ij + S_ij| <= Lambda_ij for every pair
/// in different clusters. R is the candidate's explicit inverse.
inline GlassoConditionResult check_glasso_condition(const SymmetricMatrix& r,
                                                    const SymmetricMatrix& s,
                                                    const SymmetricMatrix& lam,
                                                    const VertexPartition& part,
                                                    double tol = 1e-9) {
    const int p = part.vertex_count();
    if (r.dim() != p || s.dim() != p || lam.dim() != p)
        throw std::invalid_argument("check_glasso_condition: dimension mismatch");
    GlassoConditionResult out;
    out.worst_violation = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            if (part.psi[i] == part.psi[j]) continue;
            const double slack = std::abs(-r(i, j) + s(i, j)) - lam(i, j);
            if (slack > out.worst_violation) {
                out.worst_violation = slack;
                out.i = i;
                out.j = j;
            }
        }
    }
    if (out.i == -1) out.worst_violation = 0.0;  // no cross-cluster pair at all
    out.satisfied = out.worst_violation <= tol;
    return out;
}

/// Warm-start initializer for an arbitrary vertex partition: per-cluster
/// optimal blocks, explicit entries on external edges, and zeta corrections
/// summed over the external edges incident to each vertex. Coincides with the
/// optimum when the partition is the bridge-block decomposition. Positive
/// definiteness is verified by factorization, never assumed.
inline SymmetricMatrix warm_start(const SymmetricMatrix& s, const SymmetricMatrix& lam,
                                  const VertexPartition& part, const SolverConfig& cfg,
                                  int threads = 1) {
    const int p = s.dim();
    if (lam.dim() != p || part.vertex_count() != p)
        throw std::invalid_argument("warm_start: dimension mismatch");
    const ThresholdedMatrix t = threshold(s, lam);

    std::vector<SubSolution> subs(part.cluster_count());
    std::vector<int> order(part.cluster_count());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (part.clusters[a].size() != part.clusters[b].size())
            return part.clusters[a].size() > part.clusters[b].size();
        return a < b;
    });
    parallel_for(part.cluster_count(), threads, [&](int idx) {
        const int k = order[idx];
        subs[k] = solve_subproblem(s.submatrix(part.clusters[k]), lam.submatrix(part.clusters[k]),
                                   cfg);
    });

    SymmetricMatrix theta(p);
    for (int k = 0; k < part.cluster_count(); ++k) {
        const auto& members = part.clusters[k];
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = a; b < members.size(); ++b)
                theta.set(members[a], members[b],
                          subs[k].theta_hat(static_cast<int>(a), static_cast<int>(b)));
    }
    for (const Edge& e : part.external_edges) {
        const double t_ij = t.value(e.first, e.second);
        const double denom = s(e.first, e.first) * s(e.second, e.second) - t_ij * t_ij;
        if (!(denom > 0.0)) throw DegenerateDenominator(e.first, e.second);
        theta.set(e.first, e.second, -t_ij / denom);
        theta.add(e.first, e.first, t_ij * t_ij / denom / s(e.first, e.first));
        theta.add(e.second, e.second, t_ij * t_ij / denom / s(e.second, e.second));
    }

    factorize(theta, cfg.pivot_floor_rel);  // throws NotPositiveDefinite for indefinite partitions
    return theta;
}

}  // namespace mtp2
