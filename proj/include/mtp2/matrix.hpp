#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mtp2/errors.hpp"

namespace mtp2 {

/// Dense symmetric real matrix. One storage type serves every role in the
/// problem (sample covariance S, regularizer Lambda, precision Theta and its
/// inverse R); symmetry is maintained by the write interface.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;

    explicit SymmetricMatrix(int p) : m_(Eigen::MatrixXd::Zero(p, p)) {
        if (p < 1) throw std::invalid_argument("SymmetricMatrix: dimension must be >= 1");
    }

    static SymmetricMatrix identity(int p) {
        SymmetricMatrix a(p);
        a.m_.setIdentity();
        return a;
    }

    /// Averages a matrix with its transpose without any symmetry check; for
    /// results of algebra that are symmetric up to round-off by construction.
    static SymmetricMatrix symmetrize(const Eigen::MatrixXd& a) {
        if (a.rows() != a.cols() || a.rows() < 1)
            throw std::invalid_argument("symmetrize: matrix must be square, dimension >= 1");
        SymmetricMatrix out;
        out.m_ = 0.5 * (a + a.transpose());
        return out;
    }

    /// Wraps a dense matrix, checking symmetry up to `sym_tol` relative to the
    /// largest entry and then symmetrizing exactly.
    static SymmetricMatrix from_dense(Eigen::MatrixXd a, double sym_tol = 1e-10) {
        if (a.rows() != a.cols() || a.rows() < 1)
            throw std::invalid_argument("from_dense: matrix must be square, dimension >= 1");
        const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
        const double skew = (a - a.transpose()).cwiseAbs().maxCoeff();
        if (skew > sym_tol * scale)
            throw std::invalid_argument("from_dense: matrix is not symmetric");
        SymmetricMatrix out;
        out.m_ = 0.5 * (a + a.transpose());
        return out;
    }

    int dim() const { return static_cast<int>(m_.rows()); }

    double operator()(int i, int j) const { return m_(i, j); }

    /// Writes both (i,j) and (j,i).
    void set(int i, int j, double v) {
        m_(i, j) = v;
        m_(j, i) = v;
    }

    void add(int i, int j, double v) {
        m_(i, j) += v;
        if (i != j) m_(j, i) += v;
    }

    const Eigen::MatrixXd& m() const { return m_; }

    /// Principal submatrix on the given (sorted) index set.
    SymmetricMatrix submatrix(const std::vector<int>& idx) const {
        SymmetricMatrix out;
        out.m_ = m_(idx, idx);
        return out;
    }

private:
    Eigen::MatrixXd m_;
};

/// Cholesky factorization A = L * L^T of a symmetric positive definite matrix.
class SpdFactorization {
public:
    int dim() const { return static_cast<int>(l_.rows()); }
    const Eigen::MatrixXd& factor() const { return l_; }

    friend SpdFactorization factorize(const SymmetricMatrix&, double);

private:
    Eigen::MatrixXd l_;
};

/// Blocked right-looking Cholesky. Fails with the offending pivot index when
/// any pivot drops to or below `pivot_floor_rel * max(diag)`, which is the
/// positive-definiteness certificate used throughout.
inline SpdFactorization factorize(const SymmetricMatrix& a, double pivot_floor_rel = 1e-12) {
    const int p = a.dim();
    Eigen::MatrixXd l = a.m();
    const double floor = pivot_floor_rel * std::max(l.diagonal().maxCoeff(), 0.0);
    constexpr int kBlock = 64;

    for (int k = 0; k < p; k += kBlock) {
        const int b = std::min(kBlock, p - k);
        for (int j = k; j < k + b; ++j) {
            const int w = j - k;
            double d = l(j, j) - l.row(j).segment(k, w).squaredNorm();
            if (!(d > floor)) throw NotPositiveDefinite(j, d);
            d = std::sqrt(d);
            l(j, j) = d;
            const int below = k + b - j - 1;
            if (below > 0) {
                l.col(j).segment(j + 1, below).noalias() -=
                    l.block(j + 1, k, below, w) * l.row(j).segment(k, w).transpose();
                l.col(j).segment(j + 1, below) /= d;
            }
        }
        const int rest = p - (k + b);
        if (rest > 0) {
            auto panel = l.block(k + b, k, rest, b);
            l.block(k, k, b, b).transpose().triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(panel);
            l.block(k + b, k + b, rest, rest).selfadjointView<Eigen::Lower>().rankUpdate(panel, -1.0);
        }
    }
    l.triangularView<Eigen::StrictlyUpper>().setZero();

    SpdFactorization f;
    f.l_ = std::move(l);
    return f;
}

inline double logdet(const SpdFactorization& f) {
    return 2.0 * f.factor().diagonal().array().log().sum();
}

/// A^{-1} = L^{-T} L^{-1}, symmetrized to remove round-off skew.
inline SymmetricMatrix invert(const SpdFactorization& f) {
    const int p = f.dim();
    Eigen::MatrixXd x = Eigen::MatrixXd::Identity(p, p);
    f.factor().triangularView<Eigen::Lower>().solveInPlace(x);
    f.factor().transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return SymmetricMatrix::symmetrize(x);
}

/// Smooth form of the penalized negative log-likelihood,
///   -log det(Theta) + <Theta, S - Lambda>,
/// equal to -log det(Theta) + <Theta, S> + sum_{i != j} Lambda_ij |Theta_ij|
/// whenever Theta has non-positive off-diagonal entries.
inline double objective(const SpdFactorization& theta_factor, const SymmetricMatrix& theta,
                        const SymmetricMatrix& s, const SymmetricMatrix& lam) {
    return -logdet(theta_factor) + (theta.m().cwiseProduct(s.m() - lam.m())).sum();
}

inline double objective(const SymmetricMatrix& theta, const SymmetricMatrix& s,
                        const SymmetricMatrix& lam) {
    if (theta.dim() != s.dim() || theta.dim() != lam.dim())
        throw std::invalid_argument("objective: dimension mismatch");
    return objective(factorize(theta), theta, s, lam);
}

}  // namespace mtp2
