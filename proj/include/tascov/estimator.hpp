#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tascov/linalg.hpp"
#include "tascov/targets.hpp"

namespace tascov {

/// Support of the discrete prior on the shrinkage intensity: strictly
/// increasing values inside (0, 1).
class AlphaGrid {
public:
    explicit AlphaGrid(std::vector<double> values);

    /// {1/c, 2/c, ..., (c-1)/c} with c = 1/step, which must be an integer >= 2.
    static AlphaGrid uniform(double step);
    /// The default grid: step 0.01, 99 points.
    static AlphaGrid standard() { return uniform(0.01); }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t k) const { return values_[k]; }
    const std::vector<double>& values() const noexcept { return values_; }
    double max() const { return values_.back(); }

private:
    std::vector<double> values_;
};

/// Number of grid points 1/step - 1. InvalidArgument unless 1/step is an
/// integer >= 2.
std::size_t grid_cardinality(double step);

/// Inverse-Wishart hyperparameters in both the mean-centred (alpha, Delta)
/// form and the classical (nu, Psi) form, for a fixed sample size n.
struct IwParams {
    double alpha;
    SymMatrix delta;
    double nu;
    SymMatrix psi;
    std::size_t n;
};

/// nu = alpha n / (1 - alpha) + p + 1, Psi = alpha n / (1 - alpha) Delta.
IwParams reparametrise(double alpha, const SymMatrix& delta, std::size_t n);
/// Inverse map: alpha = (nu-p-1)/(n+nu-p-1), Delta = Psi/(nu-p-1).
IwParams from_classical(double nu, const SymMatrix& psi, std::size_t n);

/// log p(X | alpha, Delta) under X_i ~ N(0, Sigma), Sigma ~ IW(alpha, Delta).
/// Depends on the data only through (S, n).
double log_marginal_likelihood(const SymMatrix& s, std::size_t n, double alpha,
                               const ShrinkageTarget& delta);

struct PosteriorTable {
    AlphaGrid alpha_grid;
    std::vector<std::string> target_labels;
    Eigen::MatrixXd log_ml;     ///< K x L
    Eigen::MatrixXd post_prob;  ///< K x L, sums to 1
    double log_evidence = 0.0;  ///< log-sum-exp of the prior-weighted cells
};

/// Optional non-uniform priors. Empty vectors mean uniform.
struct GridPriors {
    std::vector<double> alpha;
    std::vector<double> target;
};

/// Evaluates every (alpha_k, D_l) cell and normalises once at the end.
PosteriorTable posterior_grid(const SymMatrix& s, std::size_t n, const AlphaGrid& grid,
                              const TargetSet& set, const GridPriors& priors = {});

/// Appends the column for `added` to a table built over `set` (K new
/// likelihood evaluations) and renormalises. Uniform priors only.
PosteriorTable extend_posterior(const PosteriorTable& table, const SymMatrix& s, std::size_t n,
                                const ShrinkageTarget& added);

struct TasEstimate {
    SymMatrix sigma_hat;
    std::vector<double> target_weights;  ///< w_l, aligned with the target set
    double sample_weight;                ///< 1 - sum(w_l)
    PosteriorTable table;
};

/// Weight form: sum_l w_l D_l + (1 - sum_l w_l) S with w_l = sum_k a_k p(k, l).
/// InconsistentTable if the table does not match `set` or `s`.
TasEstimate tas_estimate(const PosteriorTable& table, const SymMatrix& s, const TargetSet& set);

/// Direct model average sum_{k,l} p(k,l) (a_k D_l + (1 - a_k) S). Same value
/// as tas_estimate; kept as an independent route for cross-checks.
SymMatrix model_average(const PosteriorTable& table, const SymMatrix& s, const TargetSet& set);

/// posterior_grid followed by tas_estimate.
TasEstimate estimate_tas(const SymMatrix& s, std::size_t n, const TargetSet& set,
                         const AlphaGrid& grid = AlphaGrid::standard());

/// alpha D + (1 - alpha) S
SymMatrix sts_estimate(const SymMatrix& s, const ShrinkageTarget& delta, double alpha);

struct EmpiricalBayes {
    double alpha;
    double log_ml;
    std::size_t index;
};

/// Grid argmax of the marginal likelihood for a fixed target. Ties go to the
/// smaller alpha.
EmpiricalBayes empirical_bayes_alpha(const SymMatrix& s, std::size_t n,
                                     const ShrinkageTarget& delta, const AlphaGrid& grid);
/// Same, reading an existing column of log marginal likelihoods.
EmpiricalBayes empirical_bayes_from_column(const PosteriorTable& table, std::size_t column);

struct BayesFactorPoint {
    double alpha;
    double bayes_factor;  ///< p(X | alpha*) / p(X | alpha), >= 1
    double log_bayes_factor;
};

std::vector<BayesFactorPoint> bayes_factor_curve(const SymMatrix& s, std::size_t n,
                                                 const ShrinkageTarget& delta,
                                                 const AlphaGrid& grid);

}  // namespace tascov
