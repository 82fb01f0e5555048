#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "mtp2/assembler.hpp"
#include "mtp2/graph.hpp"
#include "mtp2/matrix.hpp"
#include "mtp2/rng.hpp"
#include "mtp2/subsolver.hpp"

namespace mtp2 {

enum class GraphModel { BA, SBM };

struct GeneratorConfig {
    int p = 100;
    GraphModel model = GraphModel::BA;
    int ba_order = 1;          // edges attached per new node
    int sbm_blocks = 2;
    double sbm_within = 0.3;
    double sbm_between = 0.005;
    std::uint64_t seed = 0;
    int n_samples = 0;         // 0 -> 10*p
    double chi = 0.1;          // sparsity level of the regularizer
    double eps = 1e-3;

    int samples() const { return n_samples > 0 ? n_samples : 10 * p; }
};

struct SyntheticInstance {
    UndirectedGraph graph;
    SymmetricMatrix theta_true;
    SymmetricMatrix s;
    SymmetricMatrix lam;
    GeneratorConfig config;
    std::uint64_t seed_used = 0;
    int regenerations = 0;  // seeds burned by assumption violations
};

/// Random graph under the configured model. Barabasi-Albert grows by
/// preferential attachment (order one yields a random tree); the stochastic
/// block model uses contiguous equal blocks with within/between densities.
inline UndirectedGraph gen_graph(const GeneratorConfig& cfg) {
    if (cfg.p < 2) throw std::invalid_argument("gen_graph: p must be >= 2");
    Rng rng(cfg.seed);
    std::vector<Edge> edges;

    if (cfg.model == GraphModel::BA) {
        const int m = cfg.ba_order;
        if (m < 1 || m >= cfg.p) throw std::invalid_argument("gen_graph: bad BA order");
        std::vector<int> bag;  // vertices repeated once per incident edge
        for (int u = 0; u < m; ++u) {
            edges.emplace_back(u, m);
            bag.push_back(u);
            bag.push_back(m);
        }
        std::vector<int> targets;
        for (int v = m + 1; v < cfg.p; ++v) {
            targets.clear();
            while (static_cast<int>(targets.size()) < m) {
                const int candidate = bag[rng.uniform_index(bag.size())];
                if (std::find(targets.begin(), targets.end(), candidate) == targets.end())
                    targets.push_back(candidate);
            }
            for (int u : targets) {
                edges.emplace_back(u, v);
                bag.push_back(u);
                bag.push_back(v);
            }
        }
    } else {
        if (cfg.sbm_blocks < 1) throw std::invalid_argument("gen_graph: bad SBM block count");
        if (cfg.sbm_within < 0 || cfg.sbm_within > 1 || cfg.sbm_between < 0 || cfg.sbm_between > 1)
            throw std::invalid_argument("gen_graph: SBM probabilities must lie in [0,1]");
        const int block_size = (cfg.p + cfg.sbm_blocks - 1) / cfg.sbm_blocks;
        for (int i = 0; i < cfg.p; ++i) {
            for (int j = i + 1; j < cfg.p; ++j) {
                const double prob = (i / block_size == j / block_size) ? cfg.sbm_within
                                                                       : cfg.sbm_between;
                if (rng.bernoulli(prob)) edges.emplace_back(i, j);
            }
        }
    }
    return UndirectedGraph(cfg.p, std::move(edges));
}

/// Dominant adjacency eigenvalue by power iteration on A + d_max*I (the shift
/// keeps the iteration from oscillating on bipartite graphs).
inline double largest_adjacency_eigenvalue(const UndirectedGraph& g, double rel_tol = 1e-8,
                                           int max_iterations = 20000) {
    const int p = g.vertex_count();
    if (g.edge_count() == 0) return 0.0;
    double shift = 0.0;
    for (int v = 0; v < p; ++v) shift = std::max(shift, static_cast<double>(g.arcs(v).size()));
    Eigen::VectorXd x = Eigen::VectorXd::Ones(p) / std::sqrt(static_cast<double>(p));
    Eigen::VectorXd y(p);
    double value = shift;
    for (int it = 0; it < max_iterations; ++it) {
        y = shift * x;
        for (const Edge& e : g.edges()) {
            y(e.first) += x(e.second);
            y(e.second) += x(e.first);
        }
        const double rayleigh = x.dot(y);  // squares the eigenvector error
        const double norm = y.norm();
        if (norm == 0.0) return 0.0;
        x = y / norm;
        // convergence measured against the unshifted eigenvalue, with slack
        // for the geometric tail of the iteration
        const double target = 0.01 * rel_tol * std::max(std::abs(rayleigh - shift), 1e-300);
        if (std::abs(rayleigh - value) <= target && it > 2) {
            value = rayleigh;
            break;
        }
        value = rayleigh;
    }
    return value - shift;
}

/// Ground-truth M-matrix from an adjacency structure:
///   Theta = delta*I - A with delta = 1.05 * lambda_max(A),
/// then rescaled D*Theta*D so that diag(Theta^{-1}) = 1.
inline SymmetricMatrix precision_from_adjacency(const UndirectedGraph& g) {
    const int p = g.vertex_count();
    const double delta = 1.05 * largest_adjacency_eigenvalue(g);
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(p, p);
    theta.diagonal().setConstant(delta == 0.0 ? 1.0 : delta);
    for (const Edge& e : g.edges()) {
        theta(e.first, e.second) = -1.0;
        theta(e.second, e.first) = -1.0;
    }
    const SymmetricMatrix sigma = invert(factorize(SymmetricMatrix::from_dense(theta)));
    const Eigen::VectorXd d = sigma.m().diagonal().cwiseSqrt();
    theta = d.asDiagonal() * theta * d.asDiagonal();
    return SymmetricMatrix::symmetrize(theta);
}

/// S = (1/n) sum_t y_t y_t' with y_t ~ N(0, Theta^{-1}), drawn in blocks via
/// the Cholesky factor of Theta (solve L' y = z).
inline SymmetricMatrix sample_covariance(const SymmetricMatrix& theta_true, int n,
                                         std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("sample_covariance: need n >= 1");
    const int p = theta_true.dim();
    const SpdFactorization f = factorize(theta_true);
    Rng rng(seed);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd block(p, std::min(n, 256));
    int produced = 0;
    while (produced < n) {
        const int cols = std::min<int>(static_cast<int>(block.cols()), n - produced);
        for (int c = 0; c < cols; ++c)
            for (int i = 0; i < p; ++i) block(i, c) = rng.normal();
        auto y = block.leftCols(cols);
        f.factor().transpose().triangularView<Eigen::Upper>().solveInPlace(y);
        s.selfadjointView<Eigen::Lower>().rankUpdate(y, 1.0);
        produced += cols;
    }
    s /= static_cast<double>(n);
    s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
    return SymmetricMatrix::from_dense(std::move(s));
}

/// Adaptive regularizer: Lambda_ij = chi / (|Theta0_ij| + eps) off the
/// diagonal, where Theta0 is the explicit estimate
///   Theta0_ij = -T0_ij / (S_ii*S_jj - T0_ij^2),  T0_ij = max(S_ij, 0).
inline SymmetricMatrix build_regularizer(const SymmetricMatrix& s, double chi, double eps) {
    if (!(chi > 0.0) || !(eps > 0.0))
        throw std::invalid_argument("build_regularizer: chi and eps must be positive");
    const int p = s.dim();
    SymmetricMatrix lam(p);
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            const double t0 = std::max(s(i, j), 0.0);
            const double denom = s(i, i) * s(j, j) - t0 * t0;
            if (!(denom > 0.0)) throw AssumptionViolated(i, j);
            const double theta0 = -t0 / denom;
            lam.set(i, j, chi / (std::abs(theta0) + eps));
        }
    }
    return lam;
}

namespace detail {

inline bool passes_assumption(const SymmetricMatrix& s) {
    const int p = s.dim();
    for (int i = 0; i < p; ++i) {
        if (!(s(i, i) > 0.0)) return false;
        for (int j = i + 1; j < p; ++j)
            if (s(i, j) >= std::sqrt(s(i, i) * s(j, j))) return false;
    }
    return true;
}

}  // namespace detail

/// Full generation protocol: graph -> normalized M-matrix -> n = 10p Gaussian
/// samples -> adaptive regularizer. Sample covariances violating the
/// uniqueness assumption (a probability-zero event for n >= 2) are redrawn
/// with a shifted seed and counted.
inline SyntheticInstance make_instance(const GeneratorConfig& cfg) {
    SyntheticInstance inst;
    inst.config = cfg;
    inst.graph = gen_graph(cfg);
    inst.theta_true = precision_from_adjacency(inst.graph);
    std::uint64_t seed = cfg.seed;
    for (int attempt = 0;; ++attempt) {
        if (attempt > 64)
            throw std::runtime_error("make_instance: could not satisfy the uniqueness assumption");
        inst.s = sample_covariance(inst.theta_true, cfg.samples(), seed * 0x9e3779b97f4a7c15ULL + 1);
        if (detail::passes_assumption(inst.s)) break;
        seed += 1;
        inst.regenerations += 1;
    }
    inst.seed_used = seed;
    inst.lam = build_regularizer(inst.s, cfg.chi, cfg.eps);
    return inst;
}

/// Paper-style convergence metric: |f(Theta) - f(Theta*)| / |f(Theta*)|.
inline double relative_error(const SymmetricMatrix& theta, const SymmetricMatrix& theta_star,
                             const SymmetricMatrix& s, const SymmetricMatrix& lam) {
    const double f_star = objective(theta_star, s, lam);
    return std::abs(objective(theta, s, lam) - f_star) / std::abs(f_star);
}

/// Community chain used by the ratio-of-improvement study: K equal clusters
/// whose internal edges form a cycle, adjacent clusters joined by one bridge
/// (block-tridiagonal adjacency).
inline UndirectedGraph gen_community_chain(int clusters, int cluster_size) {
    if (clusters < 1 || cluster_size < 3)
        throw std::invalid_argument("gen_community_chain: need clusters >= 1, cluster_size >= 3");
    const int p = clusters * cluster_size;
    std::vector<Edge> edges;
    for (int k = 0; k < clusters; ++k) {
        const int base = k * cluster_size;
        for (int v = 0; v < cluster_size; ++v)
            edges.emplace_back(base + v, base + (v + 1) % cluster_size);
        if (k + 1 < clusters) edges.emplace_back(base + cluster_size - 1, base + cluster_size);
    }
    return UndirectedGraph(p, std::move(edges));
}

/// Lambda <- alpha*(11' - A) + (1 - alpha)*Lambda with a zero diagonal;
/// guarantees supp(T) = supp(A) for suitable alpha, which is verified.
inline SymmetricMatrix support_matched_lambda(const SymmetricMatrix& lam, const UndirectedGraph& g,
                                              double alpha) {
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("support_matched_lambda: alpha must lie in [0,1]");
    const int p = lam.dim();
    if (g.vertex_count() != p)
        throw std::invalid_argument("support_matched_lambda: dimension mismatch");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
    for (const Edge& e : g.edges()) {
        a(e.first, e.second) = 1.0;
        a(e.second, e.first) = 1.0;
    }
    Eigen::MatrixXd out = alpha * (Eigen::MatrixXd::Ones(p, p) - a) + (1.0 - alpha) * lam.m();
    out.diagonal().setZero();
    return SymmetricMatrix::symmetrize(out);
}

/// Chain instance for the ratio study: generation follows the standard
/// protocol, then Lambda is blended so the thresholded support equals the
/// underlying adjacency exactly (verified; throws when alpha fails to do so).
inline SyntheticInstance make_chain_instance(int clusters, int cluster_size, std::uint64_t seed,
                                             double chi = 0.1, double eps = 1e-3,
                                             double alpha = 0.5) {
    SyntheticInstance inst;
    inst.config.p = clusters * cluster_size;
    inst.config.seed = seed;
    inst.config.chi = chi;
    inst.config.eps = eps;
    inst.graph = gen_community_chain(clusters, cluster_size);
    inst.theta_true = precision_from_adjacency(inst.graph);
    std::uint64_t s_seed = seed;
    for (int attempt = 0;; ++attempt) {
        if (attempt > 64)
            throw std::runtime_error("make_chain_instance: could not satisfy the assumption");
        inst.s = sample_covariance(inst.theta_true, inst.config.samples(),
                                   s_seed * 0x9e3779b97f4a7c15ULL + 1);
        if (detail::passes_assumption(inst.s)) break;
        s_seed += 1;
        inst.regenerations += 1;
    }
    inst.seed_used = s_seed;
    inst.lam = support_matched_lambda(build_regularizer(inst.s, chi, eps), inst.graph, alpha);

    const ThresholdedMatrix t = threshold(inst.s, inst.lam);
    const UndirectedGraph support = support_graph(t);
    if (support.edges() != inst.graph.edges())
        throw std::runtime_error("make_chain_instance: supp(T) != supp(A); adjust alpha/chi");
    return inst;
}

struct TracePoint {
    int iteration = 0;
    double seconds = 0.0;
    double relative_error = 0.0;
};

/// Relative error of each monolithic PGD iterate against f_star, with the
/// cumulative solve time. Tracing work is excluded from the clock.
inline std::vector<TracePoint> monolithic_re_trace(const SymmetricMatrix& s,
                                                   const SymmetricMatrix& lam,
                                                   const SolverConfig& cfg, double f_star,
                                                   double target_re, double budget_seconds) {
    using Clock = std::chrono::steady_clock;
    std::vector<TracePoint> trace;
    PgdSolver solver(s, lam, cfg);
    double solve_seconds = 0.0;
    const auto record = [&] {
        trace.push_back({solver.iterations(), solve_seconds,
                         std::abs(solver.objective_value() - f_star) / std::abs(f_star)});
    };
    record();
    while (trace.back().relative_error >= target_re && solve_seconds <= budget_seconds) {
        const auto t0 = Clock::now();
        const bool more = solver.step();
        solve_seconds += std::chrono::duration<double>(Clock::now() - t0).count();
        record();
        if (!more) break;
    }
    return trace;
}

/// Relative error of the assembled intermediate solution after each lockstep
/// round of cluster iterations. The clock charges decomposition once, every
/// cluster step, and one assembly per recorded round; the objective
/// evaluation used for the trace itself is excluded.
inline std::vector<TracePoint> decomposed_re_trace(const SymmetricMatrix& s,
                                                   const SymmetricMatrix& lam,
                                                   const SolverConfig& cfg, double f_star,
                                                   double target_re, double budget_seconds) {
    using Clock = std::chrono::steady_clock;
    const auto seconds = [](Clock::time_point from) {
        return std::chrono::duration<double>(Clock::now() - from).count();
    };

    const auto t_setup = Clock::now();
    const ThresholdedMatrix t = threshold(s, lam);
    const UndirectedGraph g = support_graph(t);
    const BridgeBlockPartition part = bridge_block_decomposition(g, find_bridges(g));
    const int clusters = part.cluster_count();

    std::vector<std::unique_ptr<PgdSolver>> solvers(clusters);
    std::vector<SubSolution> current(clusters);
    for (int k = 0; k < clusters; ++k) {
        if (part.clusters[k].size() == 1) {
            const int v = part.clusters[k][0];
            current[k].theta_hat = SymmetricMatrix(1);
            current[k].theta_hat.set(0, 0, 1.0 / s(v, v));
        } else {
            solvers[k] = std::make_unique<PgdSolver>(s.submatrix(part.clusters[k]),
                                                     lam.submatrix(part.clusters[k]), cfg);
            current[k].theta_hat = SymmetricMatrix::symmetrize(solvers[k]->theta());
        }
    }
    double work_seconds = seconds(t_setup);

    std::vector<TracePoint> trace;
    for (int round = 0;; ++round) {
        const auto t_asm = Clock::now();
        AssembledSolution sol = assemble(current, part, t, s);
        const double with_assembly = work_seconds + seconds(t_asm);

        const double re = std::abs(objective(sol.theta, s, lam) - f_star) / std::abs(f_star);
        trace.push_back({round, with_assembly, re});
        if (re < target_re || with_assembly > budget_seconds) break;

        bool progressed = false;
        for (int k = 0; k < clusters; ++k) {
            if (!solvers[k] || solvers[k]->done()) continue;
            const auto t0 = Clock::now();
            solvers[k]->step();
            work_seconds += seconds(t0);
            current[k].theta_hat = SymmetricMatrix::symmetrize(solvers[k]->theta());
            progressed = true;
        }
        if (!progressed) break;  // every cluster converged yet the target was missed
    }
    return trace;
}

struct RatioResult {
    double ratio = 0.0;
    double seconds_decomposed = 0.0;
    double seconds_monolithic = 0.0;
    bool monolithic_lower_bound = false;  // budget hit; ratio is a lower bound
    double re_decomposed = 0.0;
};

/// Quotient of the time a monolithic solve needs to reach the target relative
/// error over the time of the decomposed pipeline (which includes
/// partitioning and assembly). The monolithic run stops at the budget and the
/// ratio is then reported as a lower bound. The monolithic leg always uses
/// projected gradient descent, the one solver with a stepwise driver.
inline RatioResult ratio_of_improvement(const SyntheticInstance& inst, const SolverConfig& cfg,
                                        double target_re, double budget_seconds = 300.0) {
    if (!(target_re > 0.0)) throw std::invalid_argument("ratio_of_improvement: target must be > 0");
    using Clock = std::chrono::steady_clock;
    const auto seconds_since = [](Clock::time_point from) {
        return std::chrono::duration<double>(Clock::now() - from).count();
    };

    // Reference optimum from a tight decomposed solve.
    SolverConfig tight = cfg;
    tight.tolerance = std::min(cfg.tolerance, 1e-10);
    const auto reference = estimate(inst.s, inst.lam, tight);
    const double f_star = objective(reference.first.theta, inst.s, inst.lam);

    RatioResult result;

    const auto t_dec = Clock::now();
    const auto decomposed = estimate(inst.s, inst.lam, cfg);
    result.seconds_decomposed = seconds_since(t_dec);
    result.re_decomposed =
        std::abs(objective(decomposed.first.theta, inst.s, inst.lam) - f_star) / std::abs(f_star);

    const auto t_mono = Clock::now();
    PgdSolver solver(inst.s, inst.lam, cfg);
    double elapsed = 0.0;
    bool reached = std::abs(solver.objective_value() - f_star) / std::abs(f_star) < target_re;
    while (!reached) {
        if (!solver.step()) break;
        elapsed = seconds_since(t_mono);
        reached = std::abs(solver.objective_value() - f_star) / std::abs(f_star) < target_re;
        if (!reached && elapsed > budget_seconds) {
            result.monolithic_lower_bound = true;
            break;
        }
    }
    result.seconds_monolithic = seconds_since(t_mono);
    result.ratio = result.seconds_monolithic / std::max(result.seconds_decomposed, 1e-9);
    return result;
}

}  // namespace mtp2
