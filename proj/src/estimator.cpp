#include "tascov/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "tascov/tolerances.hpp"

namespace tascov {

namespace {

void require_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorCode::DomainError,
                    "shrinkage intensity must lie in (0, 1), got " + std::to_string(alpha));
    }
}

std::vector<double> validated_prior(const std::vector<double>& w, std::size_t expected,
                                    const char* what) {
    if (w.empty()) return {};
    if (w.size() != expected) {
        throw Error(ErrorCode::DimensionMismatch, std::string(what) + " prior has " +
                                                      std::to_string(w.size()) + " entries, expected " +
                                                      std::to_string(expected));
    }
    double total = 0.0;
    for (double v : w) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::InvalidArgument, std::string(what) + " prior weights must be >= 0");
        }
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " prior weights must sum to 1");
    }
    std::vector<double> logs(w.size());
    std::transform(w.begin(), w.end(), logs.begin(), [](double v) { return std::log(v); });
    return logs;
}

void normalise(PosteriorTable& table, const std::vector<double>& log_alpha_prior,
               const std::vector<double>& log_target_prior) {
    Eigen::MatrixXd log_post = table.log_ml;
    if (!log_alpha_prior.empty()) {
        for (Eigen::Index k = 0; k < log_post.rows(); ++k)
            log_post.row(k).array() += log_alpha_prior[static_cast<std::size_t>(k)];
    }
    if (!log_target_prior.empty()) {
        for (Eigen::Index l = 0; l < log_post.cols(); ++l)
            log_post.col(l).array() += log_target_prior[static_cast<std::size_t>(l)];
    }
    table.log_evidence =
        log_sum_exp(std::span<const double>(log_post.data(), static_cast<std::size_t>(log_post.size())));
    table.post_prob = (log_post.array() - table.log_evidence).exp().matrix();
}

void check_consistent(const PosteriorTable& table, const SymMatrix& s, const TargetSet& set) {
    const auto k = static_cast<Eigen::Index>(table.alpha_grid.size());
    const auto l = static_cast<Eigen::Index>(set.size());
    if (table.target_labels != set.labels()) {
        throw Error(ErrorCode::InconsistentTable, "posterior table labels do not match the target set");
    }
    if (table.post_prob.rows() != k || table.post_prob.cols() != l) {
        throw Error(ErrorCode::InconsistentTable, "posterior table has the wrong shape");
    }
    if (s.dim() != set.dim()) {
        throw Error(ErrorCode::InconsistentTable,
                    "sample covariance dimension " + std::to_string(s.dim()) +
                        " does not match target dimension " + std::to_string(set.dim()));
    }
}

}  // namespace

AlphaGrid::AlphaGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error(ErrorCode::EmptyInput, "alpha grid must not be empty");
    for (std::size_t k = 0; k < values_.size(); ++k) {
        require_alpha(values_[k]);
        if (k > 0 && !(values_[k] > values_[k - 1])) {
            throw Error(ErrorCode::InvalidArgument, "alpha grid must be strictly increasing");
        }
    }
}

std::size_t grid_cardinality(double step) {
    if (!(step > 0.0 && step < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "alpha step must lie in (0, 1)");
    }
    const double inv = 1.0 / step;
    const double rounded = std::round(inv);
    if (std::abs(inv - rounded) > tol::kGridStep * rounded || rounded < 2.0) {
        std::ostringstream msg;
        msg << "alpha step " << step << " does not divide 1 into an integer number of intervals";
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    return static_cast<std::size_t>(rounded) - 1;
}

AlphaGrid AlphaGrid::uniform(double step) {
    const std::size_t count = grid_cardinality(step) + 1;
    std::vector<double> values;
    values.reserve(count - 1);
    // k / count rather than k * step so that nested grids share points exactly.
    for (std::size_t k = 1; k < count; ++k)
        values.push_back(static_cast<double>(k) / static_cast<double>(count));
    return AlphaGrid(std::move(values));
}

IwParams reparametrise(double alpha, const SymMatrix& delta, std::size_t n) {
    require_alpha(alpha);
    if (n == 0) throw Error(ErrorCode::DomainError, "sample size must be positive");
    (void)cholesky(delta);
    const double scale = alpha * static_cast<double>(n) / (1.0 - alpha);
    const double nu = scale + static_cast<double>(delta.dim()) + 1.0;
    return {alpha, delta, nu, delta.scaled(scale), n};
}

IwParams from_classical(double nu, const SymMatrix& psi, std::size_t n) {
    const double excess = nu - static_cast<double>(psi.dim()) - 1.0;
    if (!(excess > 0.0)) {
        throw Error(ErrorCode::DomainError, "degrees of freedom must exceed p + 1");
    }
    if (n == 0) throw Error(ErrorCode::DomainError, "sample size must be positive");
    const double alpha = excess / (static_cast<double>(n) + excess);
    return {alpha, psi.scaled(1.0 / excess), nu, psi, n};
}

double log_marginal_likelihood(const SymMatrix& s, std::size_t n, double alpha,
                               const ShrinkageTarget& delta) {
    require_alpha(alpha);
    if (n == 0) throw Error(ErrorCode::DomainError, "sample size must be positive");
    if (s.dim() != delta.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "sample covariance and target dimensions differ");
    }
    const double nd = static_cast<double>(n);
    const double pd = static_cast<double>(s.dim());
    const double ratio = alpha / (1.0 - alpha);
    const double prior_dof = ratio * nd + pd + 1.0;        // nu
    const double post_dof = nd / (1.0 - alpha) + pd + 1.0;  // nu + n

    double log_det_post = 0.0;
    try {
        log_det_post = log_det(s.combine(1.0, delta.matrix(), ratio));
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NotPositiveDefinite) throw;
        throw Error(ErrorCode::NotPositiveDefinite,
                    "S + (alpha/(1-alpha)) D is not positive definite for target '" + delta.label() +
                        "' at alpha = " + std::to_string(alpha));
    }

    return -0.5 * nd * pd * std::log(nd * std::numbers::pi) + mv_log_gamma(0.5 * post_dof, s.dim()) -
           mv_log_gamma(0.5 * prior_dof, s.dim()) +
           0.5 * prior_dof * (pd * std::log(ratio) + delta.log_det()) - 0.5 * post_dof * log_det_post;
}

PosteriorTable posterior_grid(const SymMatrix& s, std::size_t n, const AlphaGrid& grid,
                              const TargetSet& set, const GridPriors& priors) {
    if (s.dim() != set.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "sample covariance and target set dimensions differ");
    }
    const auto log_alpha_prior = validated_prior(priors.alpha, grid.size(), "alpha");
    const auto log_target_prior = validated_prior(priors.target, set.size(), "target");

    PosteriorTable table{grid, set.labels(), {}, {}, 0.0};
    const auto k_count = static_cast<Eigen::Index>(grid.size());
    const auto l_count = static_cast<Eigen::Index>(set.size());
    table.log_ml.resize(k_count, l_count);
    // Cells are independent; each writes only its own slot.
    for (Eigen::Index l = 0; l < l_count; ++l) {
        const ShrinkageTarget& target = set[static_cast<std::size_t>(l)];
        for (Eigen::Index k = 0; k < k_count; ++k) {
            table.log_ml(k, l) = log_marginal_likelihood(s, n, grid[static_cast<std::size_t>(k)], target);
        }
    }
    normalise(table, log_alpha_prior, log_target_prior);
    return table;
}

PosteriorTable extend_posterior(const PosteriorTable& table, const SymMatrix& s, std::size_t n,
                                const ShrinkageTarget& added) {
    if (s.dim() != added.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "added target dimension differs from S");
    }
    for (const auto& label : table.target_labels) {
        if (label == added.label()) {
            throw Error(ErrorCode::InvalidArgument, "duplicate target label '" + label + "'");
        }
    }
    PosteriorTable out = table;
    out.target_labels.push_back(added.label());
    const auto k_count = table.log_ml.rows();
    out.log_ml.conservativeResize(k_count, table.log_ml.cols() + 1);
    for (Eigen::Index k = 0; k < k_count; ++k) {
        out.log_ml(k, table.log_ml.cols()) =
            log_marginal_likelihood(s, n, table.alpha_grid[static_cast<std::size_t>(k)], added);
    }
    normalise(out, {}, {});
    return out;
}

TasEstimate tas_estimate(const PosteriorTable& table, const SymMatrix& s, const TargetSet& set) {
    check_consistent(table, s, set);
    const auto& alphas = table.alpha_grid.values();
    const Eigen::Map<const Eigen::VectorXd> a(alphas.data(), static_cast<Eigen::Index>(alphas.size()));

    std::vector<double> weights(set.size());
    double total = 0.0;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(s.matrix().rows(), s.matrix().cols());
    for (std::size_t l = 0; l < set.size(); ++l) {
        weights[l] = a.dot(table.post_prob.col(static_cast<Eigen::Index>(l)));
        total += weights[l];
        acc += weights[l] * set[l].matrix().matrix();
    }
    const double sample_weight = 1.0 - total;
    acc += sample_weight * s.matrix();
    return {SymMatrix::from_lower(acc), std::move(weights), sample_weight, table};
}

SymMatrix model_average(const PosteriorTable& table, const SymMatrix& s, const TargetSet& set) {
    check_consistent(table, s, set);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(s.matrix().rows(), s.matrix().cols());
    for (std::size_t l = 0; l < set.size(); ++l) {
        for (std::size_t k = 0; k < table.alpha_grid.size(); ++k) {
            const double a = table.alpha_grid[k];
            const double prob = table.post_prob(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
            acc += prob * (a * set[l].matrix().matrix() + (1.0 - a) * s.matrix());
        }
    }
    return SymMatrix::from_lower(acc);
}

TasEstimate estimate_tas(const SymMatrix& s, std::size_t n, const TargetSet& set, const AlphaGrid& grid) {
    return tas_estimate(posterior_grid(s, n, grid, set), s, set);
}

SymMatrix sts_estimate(const SymMatrix& s, const ShrinkageTarget& delta, double alpha) {
    require_alpha(alpha);
    return delta.matrix().combine(alpha, s, 1.0 - alpha);
}

EmpiricalBayes empirical_bayes_from_column(const PosteriorTable& table, std::size_t column) {
    if (column >= table.target_labels.size()) {
        throw Error(ErrorCode::InvalidArgument, "posterior table column out of range");
    }
    const auto l = static_cast<Eigen::Index>(column);
    EmpiricalBayes best{table.alpha_grid[0], table.log_ml(0, l), 0};
    for (std::size_t k = 1; k < table.alpha_grid.size(); ++k) {
        const double v = table.log_ml(static_cast<Eigen::Index>(k), l);
        if (v > best.log_ml) best = {table.alpha_grid[k], v, k};
    }
    return best;
}

EmpiricalBayes empirical_bayes_alpha(const SymMatrix& s, std::size_t n, const ShrinkageTarget& delta,
                                     const AlphaGrid& grid) {
    EmpiricalBayes best{grid[0], log_marginal_likelihood(s, n, grid[0], delta), 0};
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double v = log_marginal_likelihood(s, n, grid[k], delta);
        if (v > best.log_ml) best = {grid[k], v, k};
    }
    return best;
}

std::vector<BayesFactorPoint> bayes_factor_curve(const SymMatrix& s, std::size_t n,
                                                 const ShrinkageTarget& delta, const AlphaGrid& grid) {
    std::vector<double> log_ml(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) log_ml[k] = log_marginal_likelihood(s, n, grid[k], delta);
    const double best = *std::max_element(log_ml.begin(), log_ml.end());
    std::vector<BayesFactorPoint> out;
    out.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double lbf = best - log_ml[k];
        out.push_back({grid[k], std::exp(lbf), lbf});
    }
    return out;
}

}  // namespace tascov
