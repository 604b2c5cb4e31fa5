#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tascov/estimator.hpp"
#include "tascov/targets.hpp"

namespace tascov {

/**
 * Seeded 64-bit Mersenne Twister with deterministic substreams.
 *
 * A substream is keyed by the master seed and a path of indices, so
 * repetition m of an experiment always sees the same draws regardless of the
 * order in which repetitions run.
 */
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) : Rng(seed, 0) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() {
        ++position_;
        return engine_();
    }

    Rng substream(std::uint64_t index) const;

    static constexpr const char* algorithm() { return "mt19937_64"; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_key() const noexcept { return key_; }
    /// Number of 64-bit words consumed so far.
    std::uint64_t position() const noexcept { return position_; }

    double normal();
    double uniform(double lo, double hi);
    double chi_squared(double dof);

private:
    Rng(std::uint64_t seed, std::uint64_t key);

    std::uint64_t seed_;
    std::uint64_t key_;
    std::uint64_t position_ = 0;
    std::mt19937_64 engine_;
};

/// p x n draws X = L Z from N(0, sigma), L the Cholesky factor of sigma.
DataMatrix mvn_sample(const SymMatrix& sigma, std::size_t n, Rng& rng);

/// One draw from the inverse-Wishart with mean `delta` and intensity `alpha`
/// for sample size `n_ref`: Bartlett draw of W ~ Wishart(nu, Psi^-1), then
/// W^-1 through triangular solves.
SymMatrix inv_wishart_sample(double alpha, const SymMatrix& delta, std::size_t n_ref, Rng& rng);

enum class ScenarioId { S1 = 1, S2, S3, S4 };

struct ScenarioSpec {
    ScenarioId id = ScenarioId::S1;
    std::size_t p = 100;
    double s1_scale = 5.0;
    double s2_correlation = 0.3;
    double s3_decay = -0.7;
    double s3_variance_lo = 1.0;
    double s3_variance_hi = 5.0;
    double s4_block_correlation = 0.3;
    double s4_alpha = 0.5;
    /// Sample size used to turn s4_alpha into degrees of freedom; 0 means
    /// "the experiment's n".
    std::size_t s4_n_ref = 0;
    /// Redraw the random covariance (S3, S4) for every repetition.
    bool fresh_sigma = true;

    /// DomainError when a field is outside its documented domain.
    void validate() const;
};

ScenarioId parse_scenario(int id);

/// Block-diagonal unit-diagonal matrix with two constant-correlation blocks.
SymMatrix block_correlation(std::size_t p, double rho);

SymMatrix scenario_sigma(const ScenarioSpec& spec, Rng& rng);

struct LossPair {
    double sample_loss;     ///< ||Sigma - S||_F^2
    double estimator_loss;  ///< ||Sigma - Sigma_hat||_F^2
};

/// 100 * (sum sample_loss - sum estimator_loss) / sum sample_loss.
/// DegenerateDenominator when the sample losses sum to zero.
double prial_from_losses(std::span<const LossPair> losses);

struct CovariancePair {
    SymMatrix sample;
    SymMatrix estimate;
};
double prial(const SymMatrix& sigma_true, std::span<const CovariancePair> runs);

struct EstimatorConfig {
    enum class Kind { Tas, Sts, SampleCovariance, Plugin };
    using PluginFn = std::function<SymMatrix(const DataMatrix& data, const SymMatrix& s)>;

    Kind kind = Kind::Tas;
    std::string label;
    /// TAS target set; empty means all nine canonical targets.
    std::vector<TargetKind> targets;
    /// Fixed targets appended to the TAS set (e.g. built from external data).
    std::vector<std::shared_ptr<const ShrinkageTarget>> extra_targets;
    double alpha_step = 0.01;
    TargetKind sts_target = TargetKind::T1;
    /// Fixed STS intensity; unset means empirical Bayes on the alpha grid.
    std::optional<double> sts_alpha;
    PluginFn plugin;

    static EstimatorConfig tas(std::vector<TargetKind> kinds = {}, double alpha_step = 0.01);
    static EstimatorConfig sts(TargetKind target, std::optional<double> alpha = std::nullopt);
    static EstimatorConfig sample_covariance();
    static EstimatorConfig external(std::string label, PluginFn fn);
};

/// The TAS estimator plus the nine empirical-Bayes single-target estimators.
std::vector<EstimatorConfig> standard_estimators();

struct EstimatorResult {
    std::string label;
    double prial = 0.0;
    std::vector<LossPair> losses;  ///< one per repetition
    // TAS estimators: per-repetition weights, aligned with weight_labels.
    std::vector<std::string> weight_labels;
    std::vector<std::vector<double>> weights;
    std::vector<double> sample_weights;
    // STS estimators: the intensity used in each repetition.
    std::vector<double> alphas;
};

struct PrialReport {
    std::string protocol;
    std::uint64_t seed = 0;
    std::size_t repetitions = 0;
    std::vector<EstimatorResult> estimators;
    Warnings warnings;

    const EstimatorResult& find(const std::string& label) const;
};

struct SimulationOptions {
    /// Worker threads for repetitions; results do not depend on this.
    unsigned threads = 1;
};

PrialReport run_model_simulation(ScenarioSpec spec, std::size_t n, std::size_t repetitions,
                                 const std::vector<EstimatorConfig>& estimators, std::uint64_t seed,
                                 const SimulationOptions& options = {});

struct ColumnSplit {
    std::vector<std::size_t> small;
    std::vector<std::size_t> large;
};
/// Random partition of 0..total-1 into `small_size` and the remainder.
ColumnSplit partition_columns(std::size_t total, std::size_t small_size, Rng& rng);

PrialReport data_partition_run(const DataMatrix& full, std::size_t n_small, std::size_t repetitions,
                               const std::vector<EstimatorConfig>& estimators, std::uint64_t seed,
                               bool center = true, const SimulationOptions& options = {});

struct MleDiagnosticsRow {
    std::size_t p;
    std::size_t n;
    double mean_frobenius_error;
    /// Mean of lambda_max / lambda_min; infinity if any repetition is singular.
    double mean_condition_number;
    double singular_fraction;
};

/// Sample covariance of N(0, I) data across the (p, n = rule * p) grid.
/// Singular means lambda_min <= p * eps * lambda_max.
std::vector<MleDiagnosticsRow> mle_diagnostics(const std::vector<std::size_t>& p_list,
                                               const std::vector<double>& n_rules,
                                               std::size_t repetitions, std::uint64_t seed,
                                               bool center = true);

bool is_numerically_singular(std::span<const double> eigenvalues_desc, std::size_t p);

struct GridStudyRow {
    double step;
    std::size_t cardinality;
    double prial;
};

struct GridStudySetup {
    std::size_t p = 100;
    std::size_t n = 25;
    double variance = 4.0;
};

/// TAS with the nine canonical targets on N(0, variance * I) data, one PRIAL
/// per alpha step. All steps share the same simulated data sets.
std::vector<GridStudyRow> grid_cardinality_study(const std::vector<double>& steps,
                                                 std::size_t repetitions, std::uint64_t seed,
                                                 const GridStudySetup& setup = {},
                                                 const SimulationOptions& options = {});

}  // namespace tascov
