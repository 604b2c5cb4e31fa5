#pragma once

// Independent reference computations used by the unit and acceptance tests.
// None of these call into the library for the quantity being checked.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// log p(X | alpha, delta) for p = 1 by integrating the Gaussian likelihood
/// against the inverse-gamma prior density over log(sigma^2).
double ml_scalar_quadrature(double s, std::size_t n, double alpha, double delta);

struct MonteCarloEstimate {
    double log_mean;   ///< log of the mean likelihood
    double log_se;     ///< standard error of log_mean (delta method)
};

/// p = 2 Monte Carlo: average of the Gaussian likelihood of S over Sigma drawn
/// from the inverse-Wishart prior, using a hand-written 2x2 Bartlett sampler.
MonteCarloEstimate ml_2x2_monte_carlo(const Eigen::Matrix2d& s, std::size_t n, double alpha,
                                      const Eigen::Matrix2d& delta, std::size_t draws,
                                      std::uint64_t seed);

/// Closed-form log marginal likelihood for p = 2 in long double, with explicit
/// 2x2 determinants.
long double ml_2x2_long(const Eigen::Matrix2d& s, std::size_t n, long double alpha,
                        const Eigen::Matrix2d& delta);

struct BruteForceTas {
    std::vector<std::vector<long double>> post;  ///< K x L
    Eigen::Matrix<long double, 2, 2> sigma_hat;  ///< double sum over all cells
    std::vector<long double> weights;
};

BruteForceTas tas_2x2_brute_force(const Eigen::Matrix2d& s, std::size_t n,
                                  const std::vector<double>& grid,
                                  const std::vector<Eigen::Matrix2d>& targets);

/// S = sum_k x_k x_k^T / n by explicit loops.
Eigen::MatrixXd sample_covariance_loops(const Eigen::MatrixXd& x, bool center);

/// Mean over i < j of s_ij / sqrt(s_ii s_jj).
double mean_correlation_loops(const Eigen::MatrixXd& s);

/// CDF of the inverse-gamma distribution with the given shape and scale.
double inverse_gamma_cdf(double x, double shape, double scale);

/// Kolmogorov-Smirnov statistic of `sample` against `cdf`.
template <typename Cdf>
double ks_statistic(std::vector<double> sample, Cdf cdf) {
    std::sort(sample.begin(), sample.end());
    const double m = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, (i + 1) / m - f, f - i / m});
    }
    return d;
}

/// Random symmetric positive definite matrix A A^T + eps I.
Eigen::MatrixXd random_pd(std::size_t p, std::mt19937_64& gen, double eps = 0.1);

/// Random p x n matrix of standard normals.
Eigen::MatrixXd random_normal(std::size_t p, std::size_t n, std::mt19937_64& gen);

}  // namespace oracle
