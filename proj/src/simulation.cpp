#include "tascov/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

namespace tascov {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Runs body(m) for m in [0, count). Each call must only touch its own slot.
// The first failure (lowest m) is rethrown after all workers stop.
template <typename Body>
void for_each_repetition(std::size_t count, unsigned threads, Body&& body) {
    std::vector<std::exception_ptr> errors(count);
    if (threads <= 1 || count <= 1) {
        for (std::size_t m = 0; m < count; ++m) {
            try {
                body(m);
            } catch (...) {
                errors[m] = std::current_exception();
                break;
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::vector<std::jthread> pool;
        const unsigned workers = std::min<unsigned>(threads, static_cast<unsigned>(count));
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t m = next++; m < count && !failed; m = next++) {
                    try {
                        body(m);
                    } catch (...) {
                        errors[m] = std::current_exception();
                        failed = true;
                    }
                }
            });
        }
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

[[noreturn]] void rethrow_with_context(const std::exception& e, std::uint64_t seed, std::size_t m) {
    const std::string context =
        " (seed " + std::to_string(seed) + ", repetition " + std::to_string(m) + ")";
    if (const auto* err = dynamic_cast<const Error*>(&e)) throw Error(err->code(), err->what() + context);
    throw Error(ErrorCode::InvalidArgument, e.what() + context);
}

struct EstimatorOutput {
    SymMatrix sigma_hat;
    std::vector<double> weights;
    double sample_weight = 0.0;
    double alpha = 0.0;
};

std::vector<TargetKind> resolve_kinds(const std::vector<TargetKind>& kinds) {
    if (kinds.empty()) return {kAllTargetKinds.begin(), kAllTargetKinds.end()};
    return kinds;
}

std::vector<std::string> weight_labels(const EstimatorConfig& config) {
    std::vector<std::string> out;
    for (auto k : resolve_kinds(config.targets)) out.push_back(to_string(k));
    for (const auto& extra : config.extra_targets) out.push_back(extra->label());
    return out;
}

// Per-repetition evaluation of several estimators on one data set, sharing
// posterior tables between estimators that use the same grid and targets.
class RepetitionContext {
public:
    RepetitionContext(const DataMatrix& data, const SymMatrix& s, std::size_t n)
        : data_(data), s_(s), n_(n) {}

    EstimatorOutput evaluate(const EstimatorConfig& config) {
        switch (config.kind) {
            case EstimatorConfig::Kind::Tas: return tas(config);
            case EstimatorConfig::Kind::Sts: return sts(config);
            case EstimatorConfig::Kind::SampleCovariance: return {s_, {}, 1.0, 0.0};
            case EstimatorConfig::Kind::Plugin: {
                SymMatrix out = config.plugin(data_, s_);
                if (out.dim() != s_.dim()) {
                    throw Error(ErrorCode::DimensionMismatch,
                                "estimator '" + config.label + "' returned the wrong dimension");
                }
                return {std::move(out), {}, 0.0, 0.0};
            }
        }
        throw Error(ErrorCode::InvalidArgument, "unknown estimator kind");
    }

    Warnings& warnings() { return warnings_; }

private:
    using Extras = std::vector<std::shared_ptr<const ShrinkageTarget>>;
    struct Entry {
        double step;
        std::vector<TargetKind> kinds;
        Extras extras;
        TargetSet set;
        PosteriorTable table;
    };

    const Entry& table_for(double step, const std::vector<TargetKind>& kinds, const Extras& extras) {
        for (const auto& e : cache_)
            if (e.step == step && e.kinds == kinds && e.extras == extras) return e;
        TargetSet set = build_default_target_set(s_, &warnings_, kinds);
        for (const auto& extra : extras) set = set.with(*extra);
        PosteriorTable table = posterior_grid(s_, n_, AlphaGrid::uniform(step), set);
        cache_.push_back({step, kinds, extras, std::move(set), std::move(table)});
        return cache_.back();
    }

    EstimatorOutput tas(const EstimatorConfig& config) {
        const auto kinds = resolve_kinds(config.targets);
        const Entry& e = table_for(config.alpha_step, kinds, config.extra_targets);
        TasEstimate est = tas_estimate(e.table, s_, e.set);
        const auto labels = weight_labels(config);
        EstimatorOutput out{std::move(est.sigma_hat), std::vector<double>(labels.size(), 0.0),
                            est.sample_weight, 0.0};
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (auto idx = e.set.index_of(labels[i])) out.weights[i] = est.target_weights[*idx];
        }
        return out;
    }

    EstimatorOutput sts(const EstimatorConfig& config) {
        if (config.sts_alpha) {
            const ShrinkageTarget target = build_target(config.sts_target, s_, &warnings_);
            return {sts_estimate(s_, target, *config.sts_alpha), {}, 0.0, *config.sts_alpha};
        }
        // Reuse a table over all nine targets if one was already computed.
        const std::vector<TargetKind> all(kAllTargetKinds.begin(), kAllTargetKinds.end());
        for (const auto& e : cache_) {
            if (e.step != config.alpha_step || e.kinds != all) continue;
            if (auto idx = e.set.index_of(to_string(config.sts_target))) {
                const EmpiricalBayes eb = empirical_bayes_from_column(e.table, *idx);
                return {sts_estimate(s_, e.set[*idx], eb.alpha), {}, 0.0, eb.alpha};
            }
        }
        const ShrinkageTarget target = build_target(config.sts_target, s_, &warnings_);
        const EmpiricalBayes eb =
            empirical_bayes_alpha(s_, n_, target, AlphaGrid::uniform(config.alpha_step));
        return {sts_estimate(s_, target, eb.alpha), {}, 0.0, eb.alpha};
    }

    const DataMatrix& data_;
    const SymMatrix& s_;
    std::size_t n_;
    std::vector<Entry> cache_;
    Warnings warnings_;
};

struct RepetitionRecord {
    std::vector<EstimatorOutput> outputs;
    std::vector<LossPair> losses;
    Warnings warnings;
};

void check_estimators(const std::vector<EstimatorConfig>& estimators) {
    if (estimators.empty()) throw Error(ErrorCode::EmptyInput, "no estimators requested");
    std::set<std::string> labels;
    for (const auto& e : estimators) {
        if (!labels.insert(e.label).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate estimator label '" + e.label + "'");
        }
        if (e.kind == EstimatorConfig::Kind::Tas || (e.kind == EstimatorConfig::Kind::Sts && !e.sts_alpha)) {
            (void)grid_cardinality(e.alpha_step);
        }
        if (e.kind == EstimatorConfig::Kind::Sts && e.sts_alpha &&
            !(*e.sts_alpha > 0.0 && *e.sts_alpha < 1.0)) {
            throw Error(ErrorCode::DomainError, "STS intensity must lie in (0, 1)");
        }
        for (const auto& extra : e.extra_targets) {
            if (!extra) throw Error(ErrorCode::InvalidArgument, "null extra target in '" + e.label + "'");
        }
        if (e.kind == EstimatorConfig::Kind::Plugin && !e.plugin) {
            throw Error(ErrorCode::InvalidArgument, "external estimator '" + e.label + "' has no function");
        }
    }
}

RepetitionRecord evaluate_repetition(const DataMatrix& data, const SymMatrix& s, std::size_t n,
                                     const SymMatrix& truth,
                                     const std::vector<EstimatorConfig>& estimators) {
    RepetitionContext ctx(data, s, n);
    RepetitionRecord rec;
    const double sample_loss = frobenius_dist_sq(truth, s);
    for (const auto& config : estimators) {
        EstimatorOutput out = ctx.evaluate(config);
        rec.losses.push_back({sample_loss, frobenius_dist_sq(truth, out.sigma_hat)});
        rec.outputs.push_back(std::move(out));
    }
    rec.warnings = std::move(ctx.warnings());
    return rec;
}

PrialReport assemble(std::string protocol, std::uint64_t seed,
                     const std::vector<EstimatorConfig>& estimators,
                     std::vector<RepetitionRecord>& records) {
    PrialReport report;
    report.protocol = std::move(protocol);
    report.seed = seed;
    report.repetitions = records.size();
    for (std::size_t e = 0; e < estimators.size(); ++e) {
        EstimatorResult r;
        r.label = estimators[e].label;
        const bool is_tas = estimators[e].kind == EstimatorConfig::Kind::Tas;
        if (is_tas) r.weight_labels = weight_labels(estimators[e]);
        for (auto& rec : records) {
            r.losses.push_back(rec.losses[e]);
            auto& out = rec.outputs[e];
            if (is_tas) {
                r.weights.push_back(std::move(out.weights));
                r.sample_weights.push_back(out.sample_weight);
            } else if (estimators[e].kind == EstimatorConfig::Kind::Sts) {
                r.alphas.push_back(out.alpha);
            }
        }
        r.prial = prial_from_losses(r.losses);
        report.estimators.push_back(std::move(r));
    }
    for (std::size_t m = 0; m < records.size(); ++m) {
        for (const auto& w : records[m].warnings.messages())
            report.warnings.add("repetition " + std::to_string(m) + ": " + w);
    }
    return report;
}

constexpr std::uint64_t kFixedSigmaStream = std::numeric_limits<std::uint64_t>::max();

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(key) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
    engine_.seed(seq);
}

Rng Rng::substream(std::uint64_t index) const {
    return Rng(seed_, splitmix64(key_ ^ splitmix64(index + 1)));
}

double Rng::normal() { return std::normal_distribution<double>{}(*this); }

double Rng::uniform(double lo, double hi) { return std::uniform_real_distribution<double>{lo, hi}(*this); }

double Rng::chi_squared(double dof) { return std::chi_squared_distribution<double>{dof}(*this); }

DataMatrix mvn_sample(const SymMatrix& sigma, std::size_t n, Rng& rng) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
    const CholeskyFactor chol = cholesky(sigma);
    const auto p = static_cast<Eigen::Index>(sigma.dim());
    Eigen::MatrixXd z(p, static_cast<Eigen::Index>(n));
    for (Eigen::Index j = 0; j < z.cols(); ++j)
        for (Eigen::Index i = 0; i < p; ++i) z(i, j) = rng.normal();
    Eigen::MatrixXd x = chol.lower().triangularView<Eigen::Lower>() * z;
    return DataMatrix(std::move(x), {}, false);
}

SymMatrix inv_wishart_sample(double alpha, const SymMatrix& delta, std::size_t n_ref, Rng& rng) {
    const IwParams params = reparametrise(alpha, delta, n_ref);
    const std::size_t p = delta.dim();
    if (!(params.nu > static_cast<double>(p) + 1.0)) {
        throw Error(ErrorCode::DomainError, "inverse-Wishart mean undefined for nu <= p + 1");
    }
    // Psi = L L^T. With W = (L^-T A)(L^-T A)^T ~ Wishart(nu, Psi^-1), the
    // inverse is (L A^-T)(L A^-T)^T.
    const Eigen::MatrixXd psi_chol = cholesky(params.psi).lower();
    const auto pi = static_cast<Eigen::Index>(p);
    Eigen::MatrixXd bartlett = Eigen::MatrixXd::Zero(pi, pi);
    for (Eigen::Index i = 0; i < pi; ++i) {
        bartlett(i, i) = std::sqrt(rng.chi_squared(params.nu - static_cast<double>(i)));
        for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = rng.normal();
    }
    // B A^T = L  =>  B = L A^-T
    Eigen::MatrixXd b = psi_chol;
    bartlett.transpose().triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(b);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(pi, pi);
    sigma.selfadjointView<Eigen::Lower>().rankUpdate(b);
    return SymMatrix::from_lower(sigma);
}

void ScenarioSpec::validate() const {
    if (p < 1) throw Error(ErrorCode::DomainError, "scenario dimension must be positive");
    switch (id) {
        case ScenarioId::S1:
            if (!(s1_scale > 0.0)) throw Error(ErrorCode::DomainError, "scenario 1 scale must be positive");
            break;
        case ScenarioId::S2:
            if (p > 1 && !(s2_correlation > -1.0 / static_cast<double>(p - 1) && s2_correlation < 1.0)) {
                throw Error(ErrorCode::DomainError, "scenario 2 correlation outside the PD range");
            }
            break;
        case ScenarioId::S3:
            if (!(std::abs(s3_decay) < 1.0)) throw Error(ErrorCode::DomainError, "scenario 3 decay must satisfy |r| < 1");
            if (!(s3_variance_lo > 0.0 && s3_variance_lo <= s3_variance_hi)) {
                throw Error(ErrorCode::DomainError, "scenario 3 variance range must satisfy 0 < lo <= hi");
            }
            break;
        case ScenarioId::S4:
            if (p % 2 != 0 || p < 2) throw Error(ErrorCode::DomainError, "scenario 4 needs an even p");
            if (!(s4_alpha > 0.0 && s4_alpha < 1.0)) throw Error(ErrorCode::DomainError, "scenario 4 alpha must lie in (0, 1)");
            if (p > 2 && !(s4_block_correlation > -1.0 / static_cast<double>(p / 2 - 1) &&
                           s4_block_correlation < 1.0)) {
                throw Error(ErrorCode::DomainError, "scenario 4 block correlation outside the PD range");
            }
            break;
    }
}

ScenarioId parse_scenario(int id) {
    if (id < 1 || id > 4) throw Error(ErrorCode::InvalidArgument, "scenario must be 1, 2, 3 or 4");
    return static_cast<ScenarioId>(id);
}

SymMatrix block_correlation(std::size_t p, double rho) {
    const auto pi = static_cast<Eigen::Index>(p);
    const Eigen::Index half = pi / 2;
    Eigen::MatrixXd b = Eigen::MatrixXd::Identity(pi, pi);
    for (Eigen::Index j = 0; j < pi; ++j)
        for (Eigen::Index i = 0; i < pi; ++i)
            if (i != j && (i < half) == (j < half)) b(i, j) = rho;
    return SymMatrix::from_lower(b);
}

SymMatrix scenario_sigma(const ScenarioSpec& spec, Rng& rng) {
    spec.validate();
    const auto p = static_cast<Eigen::Index>(spec.p);
    switch (spec.id) {
        case ScenarioId::S1: return SymMatrix::identity(spec.p).scaled(spec.s1_scale);
        case ScenarioId::S2: {
            Eigen::MatrixXd m = Eigen::MatrixXd::Constant(p, p, spec.s2_correlation);
            m.diagonal().setOnes();
            return SymMatrix::from_lower(m);
        }
        case ScenarioId::S3: {
            std::vector<double> root(spec.p);
            for (auto& r : root) r = std::sqrt(rng.uniform(spec.s3_variance_lo, spec.s3_variance_hi));
            Eigen::MatrixXd m(p, p);
            for (Eigen::Index j = 0; j < p; ++j)
                for (Eigen::Index i = 0; i < p; ++i)
                    m(i, j) = (root[static_cast<std::size_t>(i)] * root[static_cast<std::size_t>(j)]) *
                              std::pow(spec.s3_decay, static_cast<int>(std::abs(i - j)));
            return SymMatrix::from_lower(m);
        }
        case ScenarioId::S4: {
            if (spec.s4_n_ref == 0) {
                throw Error(ErrorCode::DomainError, "scenario 4 needs a reference sample size");
            }
            return inv_wishart_sample(spec.s4_alpha, block_correlation(spec.p, spec.s4_block_correlation),
                                      spec.s4_n_ref, rng);
        }
    }
    throw Error(ErrorCode::DomainError, "unknown scenario");
}

double prial_from_losses(std::span<const LossPair> losses) {
    if (losses.empty()) throw Error(ErrorCode::EmptyInput, "PRIAL needs at least one repetition");
    double base = 0.0;
    double est = 0.0;
    for (const auto& l : losses) {
        base += l.sample_loss;
        est += l.estimator_loss;
    }
    if (!(base > 0.0)) {
        throw Error(ErrorCode::DegenerateDenominator,
                    "PRIAL undefined: the sample covariance equals the truth in every repetition");
    }
    return (base - est) / base * 100.0;
}

double prial(const SymMatrix& sigma_true, std::span<const CovariancePair> runs) {
    std::vector<LossPair> losses;
    losses.reserve(runs.size());
    for (const auto& r : runs) {
        losses.push_back({frobenius_dist_sq(sigma_true, r.sample), frobenius_dist_sq(sigma_true, r.estimate)});
    }
    return prial_from_losses(losses);
}

EstimatorConfig EstimatorConfig::tas(std::vector<TargetKind> kinds, double alpha_step) {
    EstimatorConfig c;
    c.kind = Kind::Tas;
    c.label = "TAS";
    c.targets = std::move(kinds);
    c.alpha_step = alpha_step;
    return c;
}

EstimatorConfig EstimatorConfig::sts(TargetKind target, std::optional<double> alpha) {
    EstimatorConfig c;
    c.kind = Kind::Sts;
    c.label = "ST" + std::to_string(static_cast<int>(target));
    c.sts_target = target;
    c.sts_alpha = alpha;
    return c;
}

EstimatorConfig EstimatorConfig::sample_covariance() {
    EstimatorConfig c;
    c.kind = Kind::SampleCovariance;
    c.label = "S";
    return c;
}

EstimatorConfig EstimatorConfig::external(std::string label, PluginFn fn) {
    EstimatorConfig c;
    c.kind = Kind::Plugin;
    c.label = std::move(label);
    c.plugin = std::move(fn);
    return c;
}

std::vector<EstimatorConfig> standard_estimators() {
    std::vector<EstimatorConfig> out{EstimatorConfig::tas()};
    for (auto k : kAllTargetKinds) out.push_back(EstimatorConfig::sts(k));
    return out;
}

const EstimatorResult& PrialReport::find(const std::string& label) const {
    for (const auto& e : estimators)
        if (e.label == label) return e;
    throw Error(ErrorCode::InvalidArgument, "no estimator labelled '" + label + "' in report");
}

PrialReport run_model_simulation(ScenarioSpec spec, std::size_t n, std::size_t repetitions,
                                 const std::vector<EstimatorConfig>& estimators, std::uint64_t seed,
                                 const SimulationOptions& options) {
    if (spec.s4_n_ref == 0) spec.s4_n_ref = n;
    spec.validate();
    check_estimators(estimators);
    if (n < 2) throw Error(ErrorCode::InsufficientSamples, "simulation needs n >= 2");
    if (repetitions == 0) throw Error(ErrorCode::InvalidArgument, "repetition count must be positive");

    const Rng master(seed);
    const bool random_sigma = spec.id == ScenarioId::S3 || spec.id == ScenarioId::S4;
    std::optional<SymMatrix> fixed_sigma;
    if (!random_sigma || !spec.fresh_sigma) {
        Rng fixed_rng = master.substream(kFixedSigmaStream);
        fixed_sigma = scenario_sigma(spec, fixed_rng);
    }

    std::vector<RepetitionRecord> records(repetitions);
    for_each_repetition(repetitions, options.threads, [&](std::size_t m) {
        try {
            Rng rng = master.substream(m);
            const SymMatrix sigma = fixed_sigma ? *fixed_sigma : scenario_sigma(spec, rng);
            const DataMatrix x = mvn_sample(sigma, n, rng);
            const SymMatrix s = sample_covariance(x, false);
            records[m] = evaluate_repetition(x, s, n, sigma, estimators);
        } catch (const std::exception& e) {
            rethrow_with_context(e, seed, m);
        }
    });
    return assemble("simulate", seed, estimators, records);
}

ColumnSplit partition_columns(std::size_t total, std::size_t small_size, Rng& rng) {
    if (small_size == 0 || small_size >= total) {
        throw Error(ErrorCode::InsufficientSamples, "cannot split " + std::to_string(total) +
                                                        " samples into a part of size " +
                                                        std::to_string(small_size) + " and a non-empty rest");
    }
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    ColumnSplit split;
    split.small.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(small_size));
    split.large.assign(order.begin() + static_cast<std::ptrdiff_t>(small_size), order.end());
    std::sort(split.small.begin(), split.small.end());
    std::sort(split.large.begin(), split.large.end());
    return split;
}

PrialReport data_partition_run(const DataMatrix& full, std::size_t n_small, std::size_t repetitions,
                               const std::vector<EstimatorConfig>& estimators, std::uint64_t seed,
                               bool center, const SimulationOptions& options) {
    check_estimators(estimators);
    const std::size_t total = full.samples();
    if (n_small < 2 || n_small >= total || total - n_small < 2) {
        throw Error(ErrorCode::InsufficientSamples,
                    "data partition needs 2 <= n_small <= N - 2, got n_small = " + std::to_string(n_small) +
                        ", N = " + std::to_string(total));
    }
    if (repetitions == 0) throw Error(ErrorCode::InvalidArgument, "repetition count must be positive");

    const Rng master(seed);
    std::vector<RepetitionRecord> records(repetitions);
    for_each_repetition(repetitions, options.threads, [&](std::size_t m) {
        try {
            Rng rng = master.substream(m);
            const ColumnSplit split = partition_columns(total, n_small, rng);
            const DataMatrix small = full.select_samples(split.small);
            const DataMatrix large = full.select_samples(split.large);
            const SymMatrix s = sample_covariance(small, center);
            const SymMatrix proxy = sample_covariance(large, center);
            records[m] = evaluate_repetition(small, s, n_small, proxy, estimators);
        } catch (const std::exception& e) {
            rethrow_with_context(e, seed, m);
        }
    });
    PrialReport report = assemble("partition", seed, estimators, records);
    if (total - n_small < full.variables()) {
        report.warnings.add("the large part has fewer samples (" + std::to_string(total - n_small) +
                            ") than variables (" + std::to_string(full.variables()) +
                            "); the proxy truth is singular");
    }
    return report;
}

bool is_numerically_singular(std::span<const double> eigenvalues_desc, std::size_t p) {
    const double top = eigenvalues_desc.front();
    const double bottom = eigenvalues_desc.back();
    return bottom <= static_cast<double>(p) * std::numeric_limits<double>::epsilon() * top;
}

std::vector<MleDiagnosticsRow> mle_diagnostics(const std::vector<std::size_t>& p_list,
                                               const std::vector<double>& n_rules, std::size_t repetitions,
                                               std::uint64_t seed, bool center) {
    if (repetitions == 0) throw Error(ErrorCode::InvalidArgument, "repetition count must be positive");
    const Rng master(seed);
    std::vector<MleDiagnosticsRow> rows;
    for (std::size_t i = 0; i < p_list.size(); ++i) {
        const std::size_t p = p_list[i];
        const SymMatrix truth = SymMatrix::identity(p);
        for (std::size_t j = 0; j < n_rules.size(); ++j) {
            const auto n = static_cast<std::size_t>(std::llround(n_rules[j] * static_cast<double>(p)));
            if (n < 2) {
                throw Error(ErrorCode::InvalidArgument, "n = " + std::to_string(n) + " for p = " +
                                                            std::to_string(p) + " is below 2");
            }
            double frob = 0.0;
            double cond = 0.0;
            std::size_t singular = 0;
            for (std::size_t m = 0; m < repetitions; ++m) {
                Rng rng = master.substream(i).substream(j).substream(m);
                const SymMatrix s = sample_covariance(mvn_sample(truth, n, rng), center);
                frob += frobenius_dist_sq(truth, s);
                const auto ev = sym_eigenvalues(s);
                if (is_numerically_singular(ev, p)) {
                    ++singular;
                } else {
                    cond += ev.front() / ev.back();
                }
            }
            const double reps = static_cast<double>(repetitions);
            rows.push_back({p, n, frob / reps,
                            singular ? std::numeric_limits<double>::infinity() : cond / reps,
                            static_cast<double>(singular) / reps});
        }
    }
    return rows;
}

std::vector<GridStudyRow> grid_cardinality_study(const std::vector<double>& steps, std::size_t repetitions,
                                                 std::uint64_t seed, const GridStudySetup& setup,
                                                 const SimulationOptions& options) {
    if (steps.empty()) throw Error(ErrorCode::EmptyInput, "no alpha steps requested");
    if (repetitions == 0) throw Error(ErrorCode::InvalidArgument, "repetition count must be positive");
    std::vector<AlphaGrid> grids;
    for (double d : steps) grids.push_back(AlphaGrid::uniform(d));
    const SymMatrix truth = SymMatrix::identity(setup.p).scaled(setup.variance);
    const Rng master(seed);

    // losses[m][g]
    std::vector<std::vector<LossPair>> losses(repetitions);
    for_each_repetition(repetitions, options.threads, [&](std::size_t m) {
        try {
            Rng rng = master.substream(m);
            const SymMatrix s = sample_covariance(mvn_sample(truth, setup.n, rng), false);
            const TargetSet set = build_default_target_set(s);
            const double base = frobenius_dist_sq(truth, s);
            for (const auto& grid : grids) {
                const TasEstimate est = estimate_tas(s, setup.n, set, grid);
                losses[m].push_back({base, frobenius_dist_sq(truth, est.sigma_hat)});
            }
        } catch (const std::exception& e) {
            rethrow_with_context(e, seed, m);
        }
    });

    std::vector<GridStudyRow> rows;
    for (std::size_t g = 0; g < grids.size(); ++g) {
        std::vector<LossPair> per_grid;
        for (const auto& rep : losses) per_grid.push_back(rep[g]);
        rows.push_back({steps[g], grids[g].size(), prial_from_losses(per_grid)});
    }
    return rows;
}

}  // namespace tascov
