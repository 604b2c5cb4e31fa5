#include "tascov/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>

namespace tascov {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::InconsistentTable: return "InconsistentTable";
        case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorCode::InsufficientSamples: return "InsufficientSamples";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

SymMatrix SymMatrix::from_lower(const Eigen::MatrixXd& values) {
    if (values.rows() == 0 || values.rows() != values.cols()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "symmetric matrix must be square and non-empty, got " +
                        std::to_string(values.rows()) + "x" + std::to_string(values.cols()));
    }
    Eigen::MatrixXd full = values.triangularView<Eigen::Lower>();
    full.triangularView<Eigen::StrictlyUpper>() = full.transpose();
    return SymMatrix(std::move(full));
}

SymMatrix SymMatrix::identity(std::size_t p) {
    const auto n = static_cast<Eigen::Index>(p);
    return from_lower(Eigen::MatrixXd::Identity(n, n));
}

SymMatrix SymMatrix::zero(std::size_t p) {
    const auto n = static_cast<Eigen::Index>(p);
    return from_lower(Eigen::MatrixXd::Zero(n, n));
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(diag.size()),
                                              static_cast<Eigen::Index>(diag.size()));
    for (std::size_t i = 0; i < diag.size(); ++i) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag[i];
    }
    return from_lower(m);
}

double SymMatrix::max_abs() const { return values_.cwiseAbs().maxCoeff(); }

SymMatrix SymMatrix::scaled(double c) const { return SymMatrix(c * values_); }

SymMatrix SymMatrix::combine(double a, const SymMatrix& other, double b) const {
    if (other.dim() != dim()) {
        throw Error(ErrorCode::DimensionMismatch, "cannot combine matrices of dimension " +
                                                      std::to_string(dim()) + " and " +
                                                      std::to_string(other.dim()));
    }
    // Entrywise a*x + b*y keeps exact symmetry.
    return SymMatrix(a * values_ + b * other.values_);
}

double CholeskyFactor::log_det() const {
    return 2.0 * lower_.diagonal().array().log().sum();
}

CholeskyFactor cholesky(const SymMatrix& m) {
    Eigen::LLT<Eigen::MatrixXd, Eigen::Lower> llt(m.matrix());
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NotPositiveDefinite, "matrix is not positive definite");
    }
    Eigen::MatrixXd lower = llt.matrixL();
    for (Eigen::Index i = 0; i < lower.rows(); ++i) {
        const double pivot = lower(i, i);
        if (!(pivot > 0.0) || !std::isfinite(pivot)) {
            throw Error(ErrorCode::NotPositiveDefinite,
                        "non-positive Cholesky pivot at index " + std::to_string(i));
        }
    }
    return CholeskyFactor(std::move(lower));
}

bool is_positive_definite(const SymMatrix& m) {
    try {
        (void)cholesky(m);
        return true;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NotPositiveDefinite) return false;
        throw;
    }
}

double log_det(const SymMatrix& m) { return cholesky(m).log_det(); }

double mv_log_gamma(double a, std::size_t p) {
    if (p == 0) throw Error(ErrorCode::DomainError, "mv_log_gamma requires p >= 1");
    const double pd = static_cast<double>(p);
    if (!(a > (pd - 1.0) / 2.0)) {
        throw Error(ErrorCode::DomainError, "mv_log_gamma argument " + std::to_string(a) +
                                                " must exceed (p-1)/2 = " +
                                                std::to_string((pd - 1.0) / 2.0));
    }
    double acc = pd * (pd - 1.0) / 4.0 * std::log(std::numbers::pi);
    for (std::size_t j = 0; j < p; ++j) {
        acc += std::lgamma(a - static_cast<double>(j) / 2.0);
    }
    return acc;
}

std::vector<double> sym_eigenvalues(const SymMatrix& m) {
    // Householder tridiagonalisation followed by implicit symmetric QR.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.matrix(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::ConvergenceFailure, "symmetric eigenvalue iteration did not converge");
    }
    const Eigen::VectorXd& ev = solver.eigenvalues();
    std::vector<double> out(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

double frobenius_dist_sq(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "frobenius distance between dimensions " +
                                                      std::to_string(a.dim()) + " and " +
                                                      std::to_string(b.dim()));
    }
    return (a.matrix() - b.matrix()).squaredNorm();
}

double log_sum_exp(std::span<const double> xs) {
    if (xs.empty()) throw Error(ErrorCode::EmptyInput, "log_sum_exp of an empty list");
    if (xs.size() == 1) return xs.front();
    const double shift = *std::max_element(xs.begin(), xs.end());
    if (!std::isfinite(shift)) return shift;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - shift);
    return shift + std::log(acc);
}

}  // namespace tascov
