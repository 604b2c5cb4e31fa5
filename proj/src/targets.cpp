#include "tascov/targets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "tascov/estimator.hpp"
#include "tascov/tolerances.hpp"

namespace tascov {

namespace {

// A variance counts as zero when it is negligible next to the largest one.
bool is_zero_variance(double s_ii, double max_diag) {
    return !(s_ii > 1e-14 * max_diag);
}

std::string join_indices(const std::vector<std::size_t>& idx) {
    std::ostringstream out;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i) out << ", ";
        out << idx[i];
    }
    return out.str();
}

}  // namespace

DataMatrix::DataMatrix(Eigen::MatrixXd entries, std::vector<std::string> labels, bool centered)
    : entries_(std::move(entries)), labels_(std::move(labels)), centered_(centered) {
    if (entries_.rows() < 1 || entries_.cols() < 1) {
        throw Error(ErrorCode::EmptyInput, "data matrix needs at least one variable and one sample");
    }
    if (!labels_.empty() && labels_.size() != variables()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "got " + std::to_string(labels_.size()) + " labels for " +
                        std::to_string(variables()) + " variables");
    }
    if (!entries_.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "data matrix contains non-finite values");
    }
    if (centered_) {
        const double bound = tol::kCentering * static_cast<double>(samples()) *
                             std::max(1.0, entries_.cwiseAbs().maxCoeff());
        if ((entries_.rowwise().sum().cwiseAbs().array() > bound).any()) {
            throw Error(ErrorCode::InvalidArgument, "data flagged centred but row sums are not zero");
        }
    }
}

std::vector<std::string> DataMatrix::resolved_labels() const {
    if (!labels_.empty()) return labels_;
    std::vector<std::string> out;
    out.reserve(variables());
    for (std::size_t i = 0; i < variables(); ++i) out.push_back("V" + std::to_string(i + 1));
    return out;
}

DataMatrix DataMatrix::centered_copy() const {
    Eigen::MatrixXd c = entries_.colwise() - entries_.rowwise().mean();
    return DataMatrix(std::move(c), labels_, true);
}

DataMatrix DataMatrix::select_samples(const std::vector<std::size_t>& columns) const {
    Eigen::MatrixXd out(entries_.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j] >= samples()) {
            throw Error(ErrorCode::InvalidArgument, "sample index out of range");
        }
        out.col(static_cast<Eigen::Index>(j)) = entries_.col(static_cast<Eigen::Index>(columns[j]));
    }
    return DataMatrix(std::move(out), labels_, false);
}

SymMatrix sample_covariance(const DataMatrix& x, bool center, Warnings* warnings) {
    if (x.samples() < 2) {
        throw Error(ErrorCode::InsufficientSamples,
                    "sample covariance needs n >= 2, got n = " + std::to_string(x.samples()));
    }
    const Eigen::MatrixXd* data = &x.entries();
    Eigen::MatrixXd centred;
    if (center && !x.centered()) {
        centred = x.entries().colwise() - x.entries().rowwise().mean();
        data = &centred;
    }
    const auto p = data->rows();
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(*data, 1.0 / static_cast<double>(x.samples()));
    SymMatrix s = SymMatrix::from_lower(acc);

    if (warnings) {
        const double max_diag = s.matrix().diagonal().maxCoeff();
        std::vector<std::size_t> zero;
        for (std::size_t i = 0; i < s.dim(); ++i) {
            if (is_zero_variance(s(i, i), max_diag)) zero.push_back(i + 1);
        }
        if (!zero.empty()) {
            warnings->add("DegenerateInput: zero-variance variable(s) at position " +
                          join_indices(zero) +
                          "; their correlations count as 0 and per-variable targets use a "
                          "floored variance");
        }
    }
    return s;
}

std::string to_string(TargetKind kind) { return "T" + std::to_string(static_cast<int>(kind)); }

TargetKind parse_target_kind(const std::string& label) {
    if (label.size() == 2 && (label[0] == 'T' || label[0] == 't') && label[1] >= '1' &&
        label[1] <= '9') {
        return static_cast<TargetKind>(label[1] - '0');
    }
    throw Error(ErrorCode::InvalidArgument, "unknown target kind '" + label + "' (expected T1..T9)");
}

VarianceModel variance_model(TargetKind kind) {
    switch ((static_cast<int>(kind) - 1) % 3) {
        case 0: return VarianceModel::Unit;
        case 1: return VarianceModel::Common;
        default: return VarianceModel::PerVariable;
    }
}

CorrelationModel correlation_model(TargetKind kind) {
    switch ((static_cast<int>(kind) - 1) / 3) {
        case 0: return CorrelationModel::Zero;
        case 1: return CorrelationModel::Constant;
        default: return CorrelationModel::Decaying;
    }
}

double mean_correlation(const SymMatrix& s) {
    const std::size_t p = s.dim();
    if (p < 2) return 0.0;
    const double max_diag = s.matrix().diagonal().maxCoeff();
    double sum = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        if (is_zero_variance(s(j, j), max_diag)) continue;
        for (std::size_t i = j + 1; i < p; ++i) {
            if (is_zero_variance(s(i, i), max_diag)) continue;
            sum += s(i, j) / std::sqrt(s(i, i) * s(j, j));
        }
    }
    const double pairs = static_cast<double>(p) * static_cast<double>(p - 1) / 2.0;
    return sum / pairs;
}

TargetComponents target_components(TargetKind kind, const SymMatrix& s, Warnings* warnings) {
    const std::size_t p = s.dim();
    const Eigen::VectorXd diag = s.matrix().diagonal();
    if (!diag.allFinite() || (diag.array() < 0.0).any()) {
        throw Error(ErrorCode::DegenerateInput,
                    "sample covariance has negative or non-finite variances");
    }
    const double mean_var = diag.mean();
    const double max_diag = diag.maxCoeff();

    TargetComponents out;
    out.variances.assign(p, 1.0);
    switch (variance_model(kind)) {
        case VarianceModel::Unit: break;
        case VarianceModel::Common:
            std::fill(out.variances.begin(), out.variances.end(), mean_var);
            break;
        case VarianceModel::PerVariable:
            for (std::size_t i = 0; i < p; ++i) {
                const double v = diag(static_cast<Eigen::Index>(i));
                out.variances[i] = is_zero_variance(v, max_diag) ? mean_var * tol::kZeroVarianceFloor : v;
            }
            break;
    }
    if (variance_model(kind) != VarianceModel::Unit && !(mean_var > 0.0)) {
        throw Error(ErrorCode::DegenerateInput,
                    to_string(kind) + ": all variances are zero, variance model undefined");
    }

    const auto pi = static_cast<Eigen::Index>(p);
    out.correlation = Eigen::MatrixXd::Identity(pi, pi);
    if (correlation_model(kind) == CorrelationModel::Zero) return out;

    double r = mean_correlation(s);
    out.mean_correlation_raw = r;
    if (correlation_model(kind) == CorrelationModel::Constant) {
        const double lower = p > 1 ? -1.0 / static_cast<double>(p - 1) : -1.0;
        if (p > 1 && !(r > lower && r < 1.0)) {
            const double repaired =
                std::copysign(std::min(std::abs(r), (1.0 - tol::kCorrelationMargin) /
                                                        static_cast<double>(p - 1)),
                              r);
            if (warnings) {
                warnings->add(to_string(kind) + ": mean correlation " + std::to_string(r) +
                              " outside the positive-definite range, replaced by " +
                              std::to_string(repaired));
            }
            r = repaired;
        }
        for (Eigen::Index j = 0; j < pi; ++j)
            for (Eigen::Index i = 0; i < pi; ++i)
                if (i != j) out.correlation(i, j) = r;
    } else {
        const double limit = 1.0 - tol::kCorrelationMargin;
        if (std::abs(r) > limit) {
            const double repaired = std::copysign(limit, r);
            if (warnings) {
                warnings->add(to_string(kind) + ": mean correlation " + std::to_string(r) +
                              " clamped to " + std::to_string(repaired));
            }
            r = repaired;
        }
        for (Eigen::Index j = 0; j < pi; ++j)
            for (Eigen::Index i = 0; i < pi; ++i)
                out.correlation(i, j) = std::pow(r, static_cast<int>(std::abs(i - j)));
    }
    out.mean_correlation_used = r;
    return out;
}

ShrinkageTarget::ShrinkageTarget(std::string label, SymMatrix matrix, Origin origin,
                                 std::string provenance)
    : label_(std::move(label)),
      matrix_(std::move(matrix)),
      origin_(origin),
      provenance_(std::move(provenance)),
      log_det_(0.0) {
    try {
        log_det_ = cholesky(matrix_).log_det();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotPositiveDefinite) throw;
        throw Error(ErrorCode::NotPositiveDefinite,
                    "target '" + label_ + "' is not positive definite");
    }
}

ShrinkageTarget build_target(TargetKind kind, const SymMatrix& s, Warnings* warnings) {
    const TargetComponents parts = target_components(kind, s, warnings);
    const auto p = static_cast<Eigen::Index>(s.dim());
    std::vector<double> root(parts.variances.size());
    std::transform(parts.variances.begin(), parts.variances.end(), root.begin(),
                   [](double v) { return std::sqrt(v); });
    Eigen::MatrixXd t(p, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) {
            // The diagonal is v_i itself, not sqrt(v_i)^2, so T3 reproduces diag(S) exactly.
            t(i, j) = i == j ? parts.variances[static_cast<std::size_t>(i)]
                             : (root[static_cast<std::size_t>(i)] * root[static_cast<std::size_t>(j)]) *
                                   parts.correlation(i, j);
        }
    }
    return ShrinkageTarget(to_string(kind), SymMatrix::from_lower(t),
                           ShrinkageTarget::Origin::Canonical, "canonical(" + to_string(kind) + ")");
}

TargetSet::TargetSet(std::vector<ShrinkageTarget> targets) : targets_(std::move(targets)) {
    if (targets_.empty()) throw Error(ErrorCode::EmptyInput, "target set must not be empty");
    std::set<std::string> seen;
    for (const auto& t : targets_) {
        if (t.dim() != targets_.front().dim()) {
            throw Error(ErrorCode::DimensionMismatch,
                        "target '" + t.label() + "' has dimension " + std::to_string(t.dim()) +
                            ", expected " + std::to_string(targets_.front().dim()));
        }
        if (!seen.insert(t.label()).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate target label '" + t.label() + "'");
        }
    }
}

std::vector<std::string> TargetSet::labels() const {
    std::vector<std::string> out;
    out.reserve(targets_.size());
    for (const auto& t : targets_) out.push_back(t.label());
    return out;
}

std::optional<std::size_t> TargetSet::index_of(const std::string& label) const {
    for (std::size_t i = 0; i < targets_.size(); ++i)
        if (targets_[i].label() == label) return i;
    return std::nullopt;
}

TargetSet TargetSet::with(ShrinkageTarget target) const {
    auto copy = targets_;
    copy.push_back(std::move(target));
    return TargetSet(std::move(copy));
}

TargetSet build_default_target_set(const SymMatrix& s, Warnings* warnings,
                                   const std::vector<TargetKind>& kinds) {
    std::vector<ShrinkageTarget> built;
    std::vector<std::string> failures;
    for (TargetKind kind : kinds) {
        try {
            built.push_back(build_target(kind, s, warnings));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NotPositiveDefinite && e.code() != ErrorCode::DegenerateInput) {
                throw;
            }
            failures.push_back(to_string(kind) + " (" + e.what() + ")");
        }
    }
    if (warnings) {
        for (const auto& f : failures) warnings->add("target excluded: " + f);
    }
    if (built.empty()) {
        throw Error(ErrorCode::DegenerateInput, "no shrinkage target could be constructed");
    }
    return TargetSet(std::move(built));
}

ShrinkageTarget external_target(const DataMatrix& aux, const std::string& name,
                                std::size_t expected_p, bool center, Warnings* warnings) {
    if (aux.variables() != expected_p) {
        throw Error(ErrorCode::DimensionMismatch,
                    "external data '" + name + "' has " + std::to_string(aux.variables()) +
                        " variables, expected " + std::to_string(expected_p));
    }
    Warnings local;
    const SymMatrix s_aux = sample_covariance(aux, center, &local);
    const TargetSet set = build_default_target_set(s_aux, &local);
    const TasEstimate est = estimate_tas(s_aux, aux.samples(), set);
    if (warnings) {
        for (const auto& m : local.messages()) warnings->add("ext:" + name + ": " + m);
    }
    return ShrinkageTarget("ext:" + name, est.sigma_hat, ShrinkageTarget::Origin::External,
                           "external(" + name + ")");
}

ShrinkageTarget matrix_target(const std::string& name, const SymMatrix& m, const std::string& source) {
    return ShrinkageTarget("ext:" + name, m, ShrinkageTarget::Origin::External,
                           "external(" + source + ")");
}

LabeledMatrix target_distance_matrix(const TargetSet& set,
                                     const std::vector<std::pair<std::string, SymMatrix>>& extra) {
    std::vector<std::string> labels = set.labels();
    std::vector<const SymMatrix*> mats;
    for (const auto& t : set.targets()) mats.push_back(&t.matrix());
    for (const auto& [label, m] : extra) {
        if (m.dim() != set.dim()) {
            throw Error(ErrorCode::DimensionMismatch,
                        "matrix '" + label + "' has dimension " + std::to_string(m.dim()) +
                            ", targets have " + std::to_string(set.dim()));
        }
        labels.push_back(label);
        mats.push_back(&m);
    }
    const auto count = static_cast<Eigen::Index>(mats.size());
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(count, count);
    for (Eigen::Index a = 0; a < count; ++a) {
        for (Eigen::Index b = a + 1; b < count; ++b) {
            const double dist = std::sqrt(frobenius_dist_sq(*mats[static_cast<std::size_t>(a)],
                                                            *mats[static_cast<std::size_t>(b)]));
            d(a, b) = dist;
            d(b, a) = dist;
        }
    }
    return {std::move(labels), std::move(d)};
}

}  // namespace tascov
