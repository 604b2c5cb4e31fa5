#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tascov/errors.hpp"

namespace tascov {

/**
 * Dense symmetric p x p matrix.
 *
 * The lower triangle is authoritative: every constructor mirrors it into the
 * upper triangle, so m(i, j) == m(j, i) holds bit for bit. Instances are
 * immutable; arithmetic returns new matrices.
 */
class SymMatrix {
public:
    /// Mirrors the lower triangle of `values`. Throws DimensionMismatch for a
    /// non-square or empty input.
    static SymMatrix from_lower(const Eigen::MatrixXd& values);
    static SymMatrix identity(std::size_t p);
    static SymMatrix zero(std::size_t p);
    static SymMatrix diagonal(std::span<const double> diag);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    double operator()(std::size_t i, std::size_t j) const {
        return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const Eigen::MatrixXd& matrix() const noexcept { return values_; }

    double max_abs() const;
    double trace() const { return values_.trace(); }

    SymMatrix scaled(double c) const;
    /// a * this + b * other
    SymMatrix combine(double a, const SymMatrix& other, double b) const;

    bool operator==(const SymMatrix& other) const {
        return values_.rows() == other.values_.rows() && values_ == other.values_;
    }

private:
    explicit SymMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {}
    Eigen::MatrixXd values_;
};

class CholeskyFactor {
public:
    std::size_t dim() const noexcept { return static_cast<std::size_t>(lower_.rows()); }
    const Eigen::MatrixXd& lower() const noexcept { return lower_; }
    /// log|M| = 2 * sum log(L_ii)
    double log_det() const;

private:
    friend CholeskyFactor cholesky(const SymMatrix& m);
    explicit CholeskyFactor(Eigen::MatrixXd lower) : lower_(std::move(lower)) {}
    Eigen::MatrixXd lower_;
};

/// Throws NotPositiveDefinite when a pivot is not strictly positive.
CholeskyFactor cholesky(const SymMatrix& m);

/// True iff cholesky(m) succeeds. This is the only positive-definiteness test
/// used in the library.
bool is_positive_definite(const SymMatrix& m);

double log_det(const SymMatrix& m);

/// log of the multivariate gamma function Gamma_p(a). DomainError when
/// a <= (p - 1) / 2.
double mv_log_gamma(double a, std::size_t p);

/// Eigenvalues in descending order. ConvergenceFailure on solver failure.
std::vector<double> sym_eigenvalues(const SymMatrix& m);

double frobenius_dist_sq(const SymMatrix& a, const SymMatrix& b);

/// Stable log(sum(exp(x))). EmptyInput on an empty span.
double log_sum_exp(std::span<const double> xs);

}  // namespace tascov
