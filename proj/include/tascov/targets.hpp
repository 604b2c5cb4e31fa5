#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tascov/errors.hpp"
#include "tascov/linalg.hpp"

namespace tascov {

/// p variables x n samples. Columns are observations.
class DataMatrix {
public:
    DataMatrix(Eigen::MatrixXd entries, std::vector<std::string> labels = {},
               bool centered = false);

    std::size_t variables() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
    std::size_t samples() const noexcept { return static_cast<std::size_t>(entries_.cols()); }
    const Eigen::MatrixXd& entries() const noexcept { return entries_; }
    bool centered() const noexcept { return centered_; }
    /// Empty when the data carried no names.
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    /// labels() if present, otherwise V1..Vp.
    std::vector<std::string> resolved_labels() const;

    /// Copy with each variable's mean subtracted.
    DataMatrix centered_copy() const;
    /// Copy restricted to the given sample columns.
    DataMatrix select_samples(const std::vector<std::size_t>& columns) const;

private:
    Eigen::MatrixXd entries_;
    std::vector<std::string> labels_;
    bool centered_;
};

/// S = X X^T / n. With `center` the variable means are removed first. Zero
/// variance variables are reported through `warnings`.
SymMatrix sample_covariance(const DataMatrix& x, bool center, Warnings* warnings = nullptr);

// Table of canonical targets: rows are the variance model (unit, common,
// per-variable), columns the correlation model (zero, constant, AR decay).
enum class TargetKind { T1 = 1, T2, T3, T4, T5, T6, T7, T8, T9 };

inline constexpr std::array<TargetKind, 9> kAllTargetKinds = {
    TargetKind::T1, TargetKind::T2, TargetKind::T3, TargetKind::T4, TargetKind::T5,
    TargetKind::T6, TargetKind::T7, TargetKind::T8, TargetKind::T9};

std::string to_string(TargetKind kind);
/// Parses "T1".."T9" (case-insensitive). InvalidArgument otherwise.
TargetKind parse_target_kind(const std::string& label);

enum class VarianceModel { Unit, Common, PerVariable };
enum class CorrelationModel { Zero, Constant, Decaying };
VarianceModel variance_model(TargetKind kind);
CorrelationModel correlation_model(TargetKind kind);

/// Mean of the off-diagonal sample correlations s_ij / sqrt(s_ii s_jj).
/// Pairs involving a zero-variance variable contribute 0. Zero for p == 1.
double mean_correlation(const SymMatrix& s);

/// The V and R factors of T = V^{1/2} R V^{1/2}, after the PD repair rules.
struct TargetComponents {
    std::vector<double> variances;
    Eigen::MatrixXd correlation;
    double mean_correlation_raw = 0.0;
    double mean_correlation_used = 0.0;
};
TargetComponents target_components(TargetKind kind, const SymMatrix& s,
                                   Warnings* warnings = nullptr);

/// A positive-definite matrix validated at construction; log|D| is cached
/// because every marginal-likelihood evaluation needs it.
class ShrinkageTarget {
public:
    enum class Origin { Canonical, External };

    /// Throws NotPositiveDefinite when `matrix` fails the Cholesky test.
    ShrinkageTarget(std::string label, SymMatrix matrix, Origin origin, std::string provenance);

    const std::string& label() const noexcept { return label_; }
    const SymMatrix& matrix() const noexcept { return matrix_; }
    Origin origin() const noexcept { return origin_; }
    /// e.g. "canonical(T4)" or "external(aux.csv)"
    const std::string& provenance() const noexcept { return provenance_; }
    std::size_t dim() const noexcept { return matrix_.dim(); }
    double log_det() const noexcept { return log_det_; }

private:
    std::string label_;
    SymMatrix matrix_;
    Origin origin_;
    std::string provenance_;
    double log_det_;
};

ShrinkageTarget build_target(TargetKind kind, const SymMatrix& s, Warnings* warnings = nullptr);

/// Ordered, non-empty list of targets of one dimension with unique labels.
class TargetSet {
public:
    explicit TargetSet(std::vector<ShrinkageTarget> targets);

    std::size_t size() const noexcept { return targets_.size(); }
    std::size_t dim() const noexcept { return targets_.front().dim(); }
    const ShrinkageTarget& operator[](std::size_t i) const { return targets_[i]; }
    const std::vector<ShrinkageTarget>& targets() const noexcept { return targets_; }
    std::vector<std::string> labels() const;
    std::optional<std::size_t> index_of(const std::string& label) const;

    /// Copy with one more target appended.
    TargetSet with(ShrinkageTarget target) const;

private:
    std::vector<ShrinkageTarget> targets_;
};

/// Builds the requested canonical targets (all nine by default). Targets that
/// cannot be made positive definite are dropped with a warning; throws
/// DegenerateInput only if nothing survives.
TargetSet build_default_target_set(const SymMatrix& s, Warnings* warnings = nullptr,
                                   const std::vector<TargetKind>& kinds = {
                                       kAllTargetKinds.begin(), kAllTargetKinds.end()});

/// Regularised covariance of auxiliary data, used as a target for the primary
/// data: the target-averaged estimate over the nine canonical targets on the
/// default alpha grid. `expected_p` is the primary dimension.
ShrinkageTarget external_target(const DataMatrix& aux, const std::string& name,
                                std::size_t expected_p, bool center = true,
                                Warnings* warnings = nullptr);

/// Wraps a precomputed matrix (e.g. read from CSV) as a target. Throws
/// NotPositiveDefinite if it fails validation.
ShrinkageTarget matrix_target(const std::string& name, const SymMatrix& m,
                              const std::string& source);

struct LabeledMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXd values;
};

/// Pairwise Frobenius distances sqrt(||A - B||_F^2). `extra` appends further
/// matrices (e.g. S or a known truth) as additional rows/columns.
LabeledMatrix target_distance_matrix(
    const TargetSet& set,
    const std::vector<std::pair<std::string, SymMatrix>>& extra = {});

}  // namespace tascov
