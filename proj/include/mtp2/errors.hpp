#pragma once

#include <stdexcept>
#include <string>

namespace mtp2 {

/// A Cholesky pivot fell below the positive-definiteness floor.
class NotPositiveDefinite : public std::runtime_error {
public:
    NotPositiveDefinite(int pivot, double value)
        : std::runtime_error("matrix not positive definite: pivot " + std::to_string(pivot) +
                             " = " + std::to_string(value)),
          pivot_(pivot), value_(value) {}

    int pivot() const noexcept { return pivot_; }
    double value() const noexcept { return value_; }

private:
    int pivot_;
    double value_;
};

/// S_ij >= sqrt(S_ii * S_jj) for some pair, so the problem has no unique minimizer.
class AssumptionViolated : public std::runtime_error {
public:
    AssumptionViolated(int i, int j)
        : std::runtime_error("assumption violated at entry (" + std::to_string(i) + "," +
                             std::to_string(j) + "): |S_ij| >= sqrt(S_ii*S_jj)"),
          i_(i), j_(j) {}

    int i() const noexcept { return i_; }
    int j() const noexcept { return j_; }

private:
    int i_;
    int j_;
};

class SameCluster : public std::logic_error {
public:
    SameCluster(int i, int j)
        : std::logic_error("vertices " + std::to_string(i) + " and " + std::to_string(j) +
                           " lie in the same cluster") {}
};

class PartitionMismatch : public std::runtime_error {
public:
    explicit PartitionMismatch(const std::string& what) : std::runtime_error(what) {}
};

class NotAcyclic : public std::runtime_error {
public:
    explicit NotAcyclic(const std::string& what) : std::runtime_error(what) {}
};

class DegenerateDenominator : public std::runtime_error {
public:
    DegenerateDenominator() : std::runtime_error("degenerate denominator S_ii*S_jj - T_ij^2 <= 0") {}
    DegenerateDenominator(int i, int j)
        : std::runtime_error("degenerate denominator S_ii*S_jj - T_ij^2 <= 0 at (" +
                             std::to_string(i) + "," + std::to_string(j) + ")") {}
};

/// Raised only where a converged result is mandatory (e.g. the dense oracle).
class MaxIterationsExceeded : public std::runtime_error {
public:
    MaxIterationsExceeded(int iterations, double residual)
        : std::runtime_error("no convergence after " + std::to_string(iterations) +
                             " iterations (residual " + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}

    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

/// Malformed input file (Matrix Market, CSV, partition list).
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mtp2
