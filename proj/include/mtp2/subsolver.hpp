#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mtp2/errors.hpp"
#include "mtp2/matrix.hpp"

namespace mtp2 {

enum class SolveMethod { PGD, BCD };

struct SolverConfig {
    double tolerance = 1e-8;     // KKT residual target
    int max_iterations = 100000;
    SolveMethod method = SolveMethod::PGD;
    double backtrack_shrink = 0.5;  // in (0,1)
    double initial_step = 1.0;
    double zero_cutoff = 1e-12;     // |Theta_ij| below this counts as zero in the KKT branches
    double pivot_floor_rel = 1e-12;
    double armijo_sigma = 1e-4;
    int max_backtracks = 100;
};

/// Minimizer of one M-matrix constrained log-determinant sub-problem, with
/// its inverse and convergence diagnostics.
struct SubSolution {
    SymmetricMatrix theta_hat;
    SymmetricMatrix r_hat;
    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
    double logdet_theta = std::numeric_limits<double>::quiet_NaN();
    double objective = std::numeric_limits<double>::quiet_NaN();
};

/// Gradient of the smooth objective: -Theta^{-1} + S - Lambda.
inline SymmetricMatrix gradient(const SymmetricMatrix& theta, const SymmetricMatrix& s,
                                const SymmetricMatrix& lam) {
    const SymmetricMatrix r = invert(factorize(theta));
    return SymmetricMatrix::symmetrize(-r.m() + s.m() - lam.m());
}

/// Largest violation of the stationarity system, with R = Theta^{-1} supplied
/// by the caller:
///   |-R_ii + S_ii|                      on the diagonal,
///   |-R_ij + S_ij - Lambda_ij|          where Theta_ij != 0,
///   max(0, -R_ij + S_ij - Lambda_ij)    where Theta_ij  = 0.
/// Zero exactly at the unique optimum.
inline double kkt_residual(const SymmetricMatrix& theta, const SymmetricMatrix& r,
                           const SymmetricMatrix& s, const SymmetricMatrix& lam,
                           double zero_cutoff = 1e-12) {
    const int p = theta.dim();
    if (r.dim() != p || s.dim() != p || lam.dim() != p)
        throw std::invalid_argument("kkt_residual: dimension mismatch");
    double worst = 0.0;
    for (int i = 0; i < p; ++i) {
        worst = std::max(worst, std::abs(-r(i, i) + s(i, i)));
        for (int j = i + 1; j < p; ++j) {
            const double station = -r(i, j) + s(i, j) - lam(i, j);
            if (std::abs(theta(i, j)) > zero_cutoff)
                worst = std::max(worst, std::abs(station));
            else
                worst = std::max(worst, std::max(0.0, station));
        }
    }
    return worst;
}

/// Projected gradient descent with a Barzilai-Borwein step seed and Armijo
/// backtracking. The projection clamps positive off-diagonal entries to zero
/// (the diagonal is unconstrained); the line search additionally rejects any
/// step whose factorization fails, so every accepted iterate is a feasible
/// M-matrix. Exposed as a stepwise driver so callers can interleave cluster
/// solves or record per-iteration traces.
class PgdSolver {
public:
    PgdSolver(const SymmetricMatrix& s, const SymmetricMatrix& lam, SolverConfig cfg,
              std::optional<SymmetricMatrix> init = std::nullopt)
        : cfg_(cfg), s_(s), lam_(lam), work_(s.dim(), s.dim()) {
        const int p = s.dim();
        if (lam.dim() != p) throw std::invalid_argument("PgdSolver: dimension mismatch");
        m_ = s.m() - lam.m();
        if (init) {
            theta_ = init->m();
            if (theta_.rows() != p) throw std::invalid_argument("PgdSolver: bad initial point");
            project(theta_);  // clamp any positive off-diagonals in the start point
        } else {
            for (int i = 0; i < p; ++i)
                if (!(s(i, i) > 0.0)) throw AssumptionViolated(i, i);
            theta_ = s.m().diagonal().cwiseInverse().asDiagonal();
        }
        refresh_state();
        best_theta_ = theta_;
        best_r_ = r_;
        best_residual_ = residual_;
        best_logdet_ = logdet_;
    }

    /// One accepted PGD step. Returns false once converged or stalled.
    bool step() {
        if (done()) return false;

        double gamma = bb_step();
        bool accepted = false;
        Eigen::MatrixXd cand;
        double f_cand = 0.0, ld_cand = 0.0;
        Eigen::MatrixXd cand_l;

        // The objective cannot resolve decreases below its floating noise, so
        // the sufficient-decrease test carries an epsilon allowance; without
        // it the line search starves once the gradient is ~sqrt(eps * |f|).
        const double noise =
            16.0 * std::numeric_limits<double>::epsilon() * (std::abs(f_) + 1.0);
        for (int bt = 0; bt < cfg_.max_backtracks && !accepted; ++bt) {
            cand = theta_ - gamma * grad_;
            project(cand);
            if ((cand - theta_).cwiseAbs().maxCoeff() == 0.0) {
                stalled_ = true;  // the step underflowed: no representable progress left
                return false;
            }
            try {
                SpdFactorization f = factorize(SymmetricMatrix::symmetrize(cand), cfg_.pivot_floor_rel);
                ld_cand = logdet(f);
                f_cand = -ld_cand + cand.cwiseProduct(m_).sum();
                const double decrease = grad_.cwiseProduct(cand - theta_).sum();
                if (f_cand <= f_ + cfg_.armijo_sigma * decrease + noise && decrease <= noise) {
                    cand_l = f.factor();
                    accepted = true;
                } else {
                    gamma *= cfg_.backtrack_shrink;
                }
            } catch (const NotPositiveDefinite&) {
                gamma *= cfg_.backtrack_shrink;
            }
        }
        if (!accepted) {
            stalled_ = true;  // step collapsed without acceptable progress
            return false;
        }

        prev_theta_ = theta_;
        prev_grad_ = grad_;
        have_prev_ = true;
        theta_ = cand;
        f_ = f_cand;
        logdet_ = ld_cand;
        update_inverse_and_gradient(cand_l);
        ++iterations_;
        if (residual_ < best_residual_) {
            best_theta_ = theta_;
            best_r_ = r_;
            best_residual_ = residual_;
            best_logdet_ = logdet_;
        }
        return !done();
    }

    bool converged() const { return residual_ <= cfg_.tolerance; }
    bool done() const {
        return converged() || stalled_ || iterations_ >= cfg_.max_iterations;
    }

    int iterations() const { return iterations_; }
    double objective_value() const { return f_; }
    double residual() const { return residual_; }
    const Eigen::MatrixXd& theta() const { return theta_; }

    /// Best iterate seen so far (by KKT residual).
    SubSolution solution() const {
        SubSolution out;
        out.theta_hat = SymmetricMatrix::symmetrize(best_theta_);
        out.r_hat = SymmetricMatrix::symmetrize(best_r_);
        out.iterations = iterations_;
        out.residual = best_residual_;
        out.converged = best_residual_ <= cfg_.tolerance;
        out.logdet_theta = best_logdet_;
        out.objective = -best_logdet_ + best_theta_.cwiseProduct(m_).sum();
        return out;
    }

private:
    void project(Eigen::MatrixXd& x) const {
        const Eigen::VectorXd diag = x.diagonal();
        x = x.cwiseMin(0.0);
        x.diagonal() = diag;
    }

    void refresh_state() {
        SpdFactorization f = factorize(SymmetricMatrix::symmetrize(theta_), cfg_.pivot_floor_rel);
        logdet_ = logdet(f);
        f_ = -logdet_ + theta_.cwiseProduct(m_).sum();
        update_inverse_and_gradient(f.factor());
    }

    void update_inverse_and_gradient(const Eigen::MatrixXd& l) {
        work_.setIdentity();
        l.triangularView<Eigen::Lower>().solveInPlace(work_);
        l.transpose().triangularView<Eigen::Upper>().solveInPlace(work_);
        r_ = 0.5 * (work_ + work_.transpose());
        grad_ = m_ - r_;
        residual_ = kkt_residual(SymmetricMatrix::symmetrize(theta_), SymmetricMatrix::symmetrize(r_),
                                 s_, lam_, cfg_.zero_cutoff);
    }

    double bb_step() const {
        if (!have_prev_) return cfg_.initial_step;
        const Eigen::MatrixXd dt = theta_ - prev_theta_;
        const Eigen::MatrixXd dg = grad_ - prev_grad_;
        const double num = dt.cwiseProduct(dt).sum();
        const double den = dt.cwiseProduct(dg).sum();
        if (!(den > 0.0) || !std::isfinite(num / den)) return cfg_.initial_step;
        return std::clamp(num / den, 1e-12, 1e12);
    }

    SolverConfig cfg_;
    SymmetricMatrix s_, lam_;
    Eigen::MatrixXd m_;  // S - Lambda
    Eigen::MatrixXd theta_, r_, grad_, work_;
    Eigen::MatrixXd prev_theta_, prev_grad_;
    Eigen::MatrixXd best_theta_, best_r_;
    double f_ = 0.0, logdet_ = 0.0;
    double residual_ = std::numeric_limits<double>::infinity();
    double best_residual_ = std::numeric_limits<double>::infinity();
    double best_logdet_ = 0.0;
    bool have_prev_ = false;
    bool stalled_ = false;
    int iterations_ = 0;
};

namespace detail {

/// One full cycle of block coordinate descent: each row/column in turn is
/// re-optimized by a non-negative least squares sub-problem solved with
/// coordinate descent. O(p^4) per sweep; kept as a cross-check solver.
inline void bcd_sweep(Eigen::MatrixXd& theta, const Eigen::MatrixXd& m,
                      const SolverConfig& cfg) {
    const int p = static_cast<int>(theta.rows());
    for (int col = 0; col < p; ++col) {
        std::vector<int> rest;
        rest.reserve(p - 1);
        for (int v = 0; v < p; ++v)
            if (v != col) rest.push_back(v);

        // Inverse of Theta with row/col removed, from the full inverse.
        SpdFactorization f = factorize(SymmetricMatrix::symmetrize(theta), cfg.pivot_floor_rel);
        const Eigen::MatrixXd w = invert(f).m();
        Eigen::VectorXd wc(p - 1), mv(p - 1), x(p - 1);
        for (int t = 0; t < p - 1; ++t) {
            wc(t) = w(rest[t], col);
            mv(t) = m(rest[t], col);
            x(t) = -theta(rest[t], col);
        }
        const Eigen::MatrixXd a_inv = w(rest, rest) - (wc * wc.transpose()) / w(col, col);
        const double s_ii = m(col, col);

        // minimize s_ii * x' A^{-1} x - 2 mv' x over x >= 0, where column = -x
        Eigen::VectorXd y = a_inv * x;  // maintained as A^{-1} x
        const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
        for (int sweep = 0; sweep < 400; ++sweep) {
            double max_change = 0.0;
            for (int t = 0; t < p - 1; ++t) {
                const double curvature = s_ii * a_inv(t, t);
                const double grad_t = 2.0 * (s_ii * y(t) - mv(t));
                double nx = x(t) - grad_t / (2.0 * curvature);
                if (nx < 0.0) nx = 0.0;
                const double delta = nx - x(t);
                if (delta != 0.0) {
                    x(t) = nx;
                    y += delta * a_inv.col(t);
                    max_change = std::max(max_change, std::abs(delta));
                }
            }
            if (max_change <= 1e-14 * scale) break;
        }

        const double diag = 1.0 / s_ii + x.dot(a_inv * x);
        for (int t = 0; t < p - 1; ++t) {
            theta(rest[t], col) = -x(t);
            theta(col, rest[t]) = -x(t);
        }
        theta(col, col) = diag;
    }
}

}  // namespace detail

/// Solves the k-th sub-problem
///   minimize -log det(Theta) + <Theta, S_k - Lambda_k>  over M-matrices
/// to the configured KKT tolerance. On iteration exhaustion the best iterate
/// is returned with converged = false.
inline SubSolution solve_subproblem(const SymmetricMatrix& s, const SymmetricMatrix& lam,
                                    const SolverConfig& cfg,
                                    std::optional<SymmetricMatrix> init = std::nullopt) {
    const int p = s.dim();
    if (p == 1) {
        if (!(s(0, 0) > 0.0)) throw AssumptionViolated(0, 0);
        SubSolution out;
        out.theta_hat = SymmetricMatrix(1);
        out.theta_hat.set(0, 0, 1.0 / s(0, 0));
        out.r_hat = SymmetricMatrix(1);
        out.r_hat.set(0, 0, s(0, 0));
        out.iterations = 0;
        out.residual = 0.0;
        out.converged = true;
        out.logdet_theta = -std::log(s(0, 0));
        out.objective = std::log(s(0, 0)) + 1.0;
        return out;
    }

    if (cfg.method == SolveMethod::BCD) {
        Eigen::MatrixXd theta;
        if (init) {
            theta = init->m();
        } else {
            for (int i = 0; i < p; ++i)
                if (!(s(i, i) > 0.0)) throw AssumptionViolated(i, i);
            theta = s.m().diagonal().cwiseInverse().asDiagonal();
        }
        const Eigen::MatrixXd m = s.m() - lam.m();
        SubSolution out;
        for (int sweep = 1; sweep <= cfg.max_iterations; ++sweep) {
            detail::bcd_sweep(theta, m, cfg);
            const SymmetricMatrix th = SymmetricMatrix::symmetrize(theta);
            SpdFactorization f = factorize(th, cfg.pivot_floor_rel);
            const SymmetricMatrix r = invert(f);
            const double res = kkt_residual(th, r, s, lam, cfg.zero_cutoff);
            if (res < out.residual) {
                out.theta_hat = th;
                out.r_hat = r;
                out.residual = res;
                out.logdet_theta = logdet(f);
                out.objective = -out.logdet_theta + theta.cwiseProduct(m).sum();
            }
            out.iterations = sweep;
            if (res <= cfg.tolerance) {
                out.converged = true;
                break;
            }
        }
        return out;
    }

    PgdSolver solver(s, lam, cfg, std::move(init));
    while (solver.step()) {
    }
    return solver.solution();
}

}  // namespace mtp2
