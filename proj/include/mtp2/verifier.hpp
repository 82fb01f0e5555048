#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mtp2/graph.hpp"
#include "mtp2/matrix.hpp"
#include "mtp2/rng.hpp"
#include "mtp2/subsolver.hpp"

namespace mtp2 {

namespace detail {

/// Telescoping product along a bridge path. Magnitudes are accumulated
/// linearly until a factor drops under 1e-8, after which the value is carried
/// in log space so long chains of sub-unit factors cannot underflow. The sign
/// is tracked separately (glasso-thresholded matrices may be negative).
class PathProduct {
public:
    void multiply(double factor) {
        if (factor == 0.0) {
            zero_ = true;
            return;
        }
        if (factor < 0.0) {
            negative_ = !negative_;
            factor = -factor;
        }
        log_ += std::log(factor);
        if (factor < 1e-8) degraded_ = true;
        if (!degraded_) linear_ *= factor;
    }

    double value() const {
        if (zero_) return 0.0;
        const double magnitude = degraded_ ? std::exp(log_) : linear_;
        return negative_ ? -magnitude : magnitude;
    }

private:
    double linear_ = 1.0;
    double log_ = 0.0;
    bool degraded_ = false;
    bool zero_ = false;
    bool negative_ = false;
};

}  // namespace detail

/// Explicit inverse R of an assembled matrix:
///   in-cluster entries from the per-cluster inverses,
///   T_ij on bridges,
///   sqrt(S_ii*S_jj) * g_ij(R) across clusters (telescoping bridge-path
///   product), zero when no path exists.
/// Valid for any cluster blocks whose inverses carry diag(Rhat_k) = diag(S_k)
/// (the diagonal stationarity every sub-problem optimum satisfies); blocks
/// need not be optimal otherwise. Materializes the full p x p matrix, so it
/// is intended for verification scale (p <= ~2000), not the estimation
/// pipeline.
inline SymmetricMatrix build_R(const std::vector<SymmetricMatrix>& cluster_inverses,
                               const BridgeBlockPartition& part, const ThresholdedMatrix& t,
                               const SymmetricMatrix& s, const UndirectedGraph& g) {
    const int p = part.vertex_count();
    if (t.dim() != p || s.dim() != p || g.vertex_count() != p)
        throw PartitionMismatch("build_R: dimension disagrees with partition");
    if (static_cast<int>(cluster_inverses.size()) != part.cluster_count())
        throw PartitionMismatch("build_R: expected one inverse per cluster");
    for (int k = 0; k < part.cluster_count(); ++k)
        if (cluster_inverses[k].dim() != static_cast<int>(part.clusters[k].size()))
            throw PartitionMismatch("build_R: inverse dimension disagrees with cluster " +
                                    std::to_string(k));

    const BridgeForest forest(part);
    SymmetricMatrix r(p);

    // Per source vertex: walk the bridge forest, carrying the accumulated
    // prefix product A with the entry vertex of each reached cluster; every
    // member v of a cluster entered at b then gets
    //   R_iv = A * Rhat[b, v] / sqrt(S_bb).
    struct Visit {
        int cluster;
        int entry;
        detail::PathProduct prefix;
    };
    std::vector<char> seen(part.cluster_count(), 0);
    std::vector<Visit> stack;
    for (int i = 0; i < p; ++i) {
        const int home = part.psi[i];
        std::fill(seen.begin(), seen.end(), 0);
        detail::PathProduct root;
        root.multiply(std::sqrt(s(i, i)));
        stack.assign(1, {home, i, root});
        seen[home] = 1;
        while (!stack.empty()) {
            const Visit visit = stack.back();
            stack.pop_back();
            const auto& members = part.clusters[visit.cluster];
            const auto& rhat = cluster_inverses[visit.cluster];
            const int b_local = part.pi[visit.entry];
            const double sqrt_sbb = std::sqrt(s(visit.entry, visit.entry));
            for (int v : members) {
                if (v < i) continue;  // each unordered pair filled once
                detail::PathProduct entry = visit.prefix;
                entry.multiply(rhat(b_local, part.pi[v]) / sqrt_sbb);
                r.set(i, v, entry.value());
            }
            for (const BridgeForest::Hop& hop : forest.hops(visit.cluster)) {
                if (seen[hop.to]) continue;
                seen[hop.to] = 1;
                detail::PathProduct prefix = visit.prefix;
                prefix.multiply(rhat(b_local, part.pi[hop.exit]) /
                                (sqrt_sbb * std::sqrt(s(hop.exit, hop.exit))));
                prefix.multiply(t.value(hop.exit, hop.entry) /
                                std::sqrt(s(hop.exit, hop.exit) * s(hop.entry, hop.entry)));
                stack.push_back({hop.to, hop.entry, prefix});
            }
        }
    }

    // Bridge entries are pinned to T_ij regardless of the path product.
    for (const Edge& b : part.bridges) r.set(b.first, b.second, t.value(b.first, b.second));
    return r;
}

/// Certificate that R inverts Theta: carries max |Theta*R - I|.
struct InverseWitness {
    SymmetricMatrix r;
    double max_identity_residual = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

inline InverseWitness verify_inverse(const SymmetricMatrix& theta, const SymmetricMatrix& r,
                                     double tol = 1e-8) {
    if (theta.dim() != r.dim()) throw std::invalid_argument("verify_inverse: dimension mismatch");
    Eigen::MatrixXd f = theta.m() * r.m();
    f.diagonal().array() -= 1.0;
    InverseWitness witness;
    witness.r = r;
    witness.max_identity_residual = f.cwiseAbs().maxCoeff();
    witness.tolerance = tol;
    witness.passed = witness.max_identity_residual <= tol;
    return witness;
}

/// For sampled cross-cluster pairs (i, j) with a non-empty bridge path,
/// checks R_ij = R_{i,u} * R_{u,j} / S_uu at every waypoint u of the path.
inline bool path_product_identity_check(const SymmetricMatrix& r, const BridgeBlockPartition& part,
                                        const UndirectedGraph& g, const SymmetricMatrix& s,
                                        int samples, std::uint64_t seed = 1,
                                        double rel_tol = 1e-10) {
    const int p = part.vertex_count();
    if (r.dim() != p || s.dim() != p || g.vertex_count() != p)
        throw std::invalid_argument("path_product_identity_check: dimension mismatch");
    if (part.cluster_count() < 2) return true;  // no cross-cluster pairs to test

    const BridgeForest forest(part);
    Rng rng(seed);
    int checked = 0;
    int attempts = 0;
    while (checked < samples && attempts < 100 * samples + 1000) {
        ++attempts;
        const int i = static_cast<int>(rng.uniform_index(p));
        const int j = static_cast<int>(rng.uniform_index(p));
        if (part.psi[i] == part.psi[j]) continue;
        const std::vector<Edge> path = forest.path(part.psi[i], part.psi[j]);
        if (path.empty()) continue;  // different components: R_ij = 0 degenerately
        for (const Edge& bridge : path) {
            for (int u : {bridge.first, bridge.second}) {
                const double lhs = r(i, j);
                const double rhs = r(i, u) * r(u, j) / s(u, u);
                if (std::abs(lhs - rhs) > rel_tol * std::max(std::abs(lhs), 1e-300)) return false;
                ++checked;
            }
        }
    }
    return true;
}

/// Monolithic reference solve at tolerance tol/10, bypassing every
/// decomposition code path. Sized for tests; refuses p beyond the cap.
inline SymmetricMatrix dense_oracle(const SymmetricMatrix& s, const SymmetricMatrix& lam,
                                    double tol, int size_cap = 200) {
    if (s.dim() > size_cap)
        throw std::invalid_argument("dense_oracle: dimension exceeds the oracle size cap");
    SolverConfig cfg;
    cfg.tolerance = tol / 10.0;
    cfg.max_iterations = 200000;
    cfg.method = SolveMethod::PGD;
    const SubSolution sub = solve_subproblem(s, lam, cfg);
    if (!sub.converged) throw MaxIterationsExceeded(sub.iterations, sub.residual);
    return sub.theta_hat;
}

}  // namespace mtp2
