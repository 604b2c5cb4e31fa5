#include "tascov/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "tascov/io.hpp"

namespace tascov {

using nlohmann::json;

namespace {

constexpr const char* kEvidenceNote =
    "log p(X|alpha,D) = -(np/2)log(n pi) + log Gamma_p((n/(1-alpha)+p+1)/2) - "
    "log Gamma_p((alpha n/(1-alpha)+p+1)/2) + ((alpha n/(1-alpha)+p+1)/2) log|alpha/(1-alpha) D| - "
    "((n/(1-alpha)+p+1)/2) log|S + alpha/(1-alpha) D|; both determinant exponents carry the 1/2 "
    "of the inverse-Wishart normalising constant";

struct Field {
    const char* key;
    json fallback;
    bool required = false;
};

const std::vector<Field>& fields_for(const std::string& command) {
    static const std::map<std::string, std::vector<Field>> table = {
        {"estimate",
         {{"input", nullptr, true},
          {"center", true},
          {"alpha_step", 0.01},
          {"targets", json::array({"T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "T9"})},
          {"external_targets", json::array()},
          {"external_data", json::array()},
          {"seed", 0},
          {"timing", true}}},
        {"targets",
         {{"input", nullptr, true},
          {"center", true},
          {"targets", json::array({"T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8", "T9"})},
          {"external_targets", json::array()},
          {"external_data", json::array()},
          {"seed", 0},
          {"timing", true}}},
        {"simulate",
         {{"scenario", nullptr, true},
          {"n", 25},
          {"p", 100},
          {"M", 100},
          {"seed", 1},
          {"alpha_step", 0.01},
          {"s4_alpha", 0.5},
          {"s4_n_ref", 0},
          {"fresh_sigma", true},
          {"threads", 1},
          {"timing", true}}},
        {"partition",
         {{"input", nullptr, true},
          {"n_small", nullptr, true},
          {"M", 100},
          {"seed", 1},
          {"center", true},
          {"alpha_step", 0.01},
          {"external_data", json::array()},
          {"threads", 1},
          {"timing", true}}},
        {"diagnose",
         {{"p", json::array({50, 100})},
          {"n_rules", json::array({10, 2, 1, 0.5, 0.1})},
          {"M", 100},
          {"seed", 1},
          {"center", true},
          {"timing", true}}},
        {"gridstudy",
         {{"d", json::array({0.2, 0.1, 0.05, 0.01, 0.005, 0.001})},
          {"M", 100},
          {"seed", 1},
          {"p", 100},
          {"n", 25},
          {"variance", 4.0},
          {"threads", 1},
          {"timing", true}}},
    };
    const auto it = table.find(command);
    if (it == table.end()) {
        throw Error(ErrorCode::InvalidArgument,
                    "unknown command '" + command +
                        "' (expected estimate, targets, simulate, partition, diagnose or gridstudy)");
    }
    return it->second;
}

bool same_kind(const json& value, const json& fallback) {
    if (fallback.is_null()) return true;
    if (fallback.is_number()) return value.is_number();
    return value.type() == fallback.type();
}

std::string type_name(const json& j) { return j.type_name(); }

std::size_t positive_size(const json& cfg, const char* key) {
    const json& v = cfg.at(key);
    if (!v.is_number_integer() && !(v.is_number() && std::floor(v.get<double>()) == v.get<double>())) {
        throw Error(ErrorCode::InvalidArgument, std::string("'") + key + "' must be an integer");
    }
    const double d = v.get<double>();
    if (d < 1) throw Error(ErrorCode::InvalidArgument, std::string("'") + key + "' must be positive");
    return static_cast<std::size_t>(d);
}

std::uint64_t seed_of(const json& cfg) {
    const json& v = cfg.at("seed");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw Error(ErrorCode::InvalidArgument, "'seed' must be a non-negative integer");
}

std::vector<std::string> string_list(const json& cfg, const char* key) {
    std::vector<std::string> out;
    for (const auto& v : cfg.at(key)) {
        if (!v.is_string()) throw Error(ErrorCode::InvalidArgument, std::string("'") + key + "' must list strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

template <typename T>
std::vector<T> number_list(const json& cfg, const char* key) {
    std::vector<T> out;
    for (const auto& v : cfg.at(key)) {
        if (!v.is_number()) throw Error(ErrorCode::InvalidArgument, std::string("'") + key + "' must list numbers");
        out.push_back(v.get<T>());
    }
    if (out.empty()) throw Error(ErrorCode::EmptyInput, std::string("'") + key + "' must not be empty");
    return out;
}

std::vector<TargetKind> target_kinds(const json& cfg) {
    std::vector<TargetKind> kinds;
    std::set<std::string> seen;
    for (const auto& label : string_list(cfg, "targets")) {
        kinds.push_back(parse_target_kind(label));
        if (!seen.insert(to_string(kinds.back())).second) {
            throw Error(ErrorCode::InvalidArgument, "target " + label + " selected twice");
        }
    }
    if (kinds.empty()) throw Error(ErrorCode::EmptyInput, "no canonical targets selected");
    return kinds;
}

std::string stem(const std::string& path) { return std::filesystem::path(path).stem().string(); }

std::string file_label(std::string label) {
    std::replace_if(label.begin(), label.end(), [](char c) { return !(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'); }, '_');
    return label;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

// Everything a report needs to reproduce itself.
struct RunContext {
    std::string command;
    json config;
    std::uint64_t seed;
    bool timing;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    Warnings warnings;

    json duration() const {
        if (!timing) return nullptr;
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    json header() const {
        return {{"tool", kToolName},
                {"version", version()},
                {"command", command},
                {"seed", seed},
                {"config", config}};
    }

    json finish(json body) const {
        json out = header();
        for (auto& [k, v] : body.items()) out[k] = v;
        out["warnings"] = warnings.messages();
        out["duration_seconds"] = duration();
        return out;
    }

    std::string csv_preamble() const {
        std::string out = "# " + std::string(kToolName) + " " + version() + " command=" + command +
                          " seed=" + std::to_string(seed) + "\n";
        out += "# config=" + config.dump() + "\n";
        const json d = duration();
        out += "# duration_seconds=" + (d.is_null() ? std::string("null") : io::format_number(d.get<double>())) + "\n";
        for (const auto& w : warnings.messages()) out += "# warning: " + w + "\n";
        return out;
    }
};

struct PrimaryData {
    DataMatrix data;
    SymMatrix s;
    TargetSet set;
};

PrimaryData load_primary(const json& cfg, RunContext& ctx) {
    DataMatrix data = io::read_data_csv(cfg.at("input").get<std::string>());
    const bool center = cfg.at("center").get<bool>();
    SymMatrix s = sample_covariance(data, center, &ctx.warnings);
    TargetSet set = build_default_target_set(s, &ctx.warnings, target_kinds(cfg));
    const std::size_t p = data.variables();

    auto add = [&](ShrinkageTarget t) {
        if (set.index_of(t.label())) {
            throw Error(ErrorCode::InvalidArgument, "external target label '" + t.label() + "' is used twice");
        }
        set = set.with(std::move(t));
    };
    for (const auto& path : string_list(cfg, "external_targets")) {
        const auto m = io::read_matrix_csv(path);
        if (m.matrix.dim() != p) {
            throw Error(ErrorCode::DimensionMismatch, "external target '" + path + "' has dimension " +
                                                          std::to_string(m.matrix.dim()) + ", data has " +
                                                          std::to_string(p) + " variables");
        }
        if (m.labels != data.resolved_labels()) {
            ctx.warnings.add("external target '" + path + "' labels differ from the data header");
        }
        add(matrix_target(stem(path), m.matrix, path));
    }
    for (const auto& path : string_list(cfg, "external_data")) {
        const DataMatrix aux = io::read_data_csv(path);
        if (aux.variables() == p && aux.resolved_labels() != data.resolved_labels()) {
            ctx.warnings.add("external data '" + path + "' labels differ from the data header");
        }
        add(external_target(aux, stem(path), p, center, &ctx.warnings));
    }
    return {std::move(data), std::move(s), std::move(set)};
}

json targets_json(const TargetSet& set) {
    json out = json::array();
    for (const auto& t : set.targets()) {
        out.push_back({{"label", t.label()}, {"provenance", t.provenance()}, {"dim", t.dim()}});
    }
    return out;
}

json distances_json(const LabeledMatrix& d) {
    return {{"labels", d.labels}, {"matrix", matrix_json(d.values)}};
}

RunResult run_estimate(const json& cfg, RunContext& ctx) {
    PrimaryData primary = load_primary(cfg, ctx);
    const AlphaGrid grid = AlphaGrid::uniform(cfg.at("alpha_step").get<double>());
    const std::size_t n = primary.data.samples();
    const PosteriorTable table = posterior_grid(primary.s, n, grid, primary.set);
    const TasEstimate est = tas_estimate(table, primary.s, primary.set);
    const auto distances = target_distance_matrix(primary.set, {{"S", primary.s}});
    const auto labels = primary.data.resolved_labels();

    json weights = json::object();
    for (std::size_t l = 0; l < primary.set.size(); ++l) weights[primary.set[l].label()] = est.target_weights[l];

    json body = {
        {"data", {{"variables", primary.data.variables()},
                  {"samples", n},
                  {"centered", cfg.at("center").get<bool>()},
                  {"labels", labels}}},
        {"targets", targets_json(primary.set)},
        {"target_order", primary.set.labels()},
        {"target_weights", weights},
        {"sample_weight", est.sample_weight},
        {"alpha_grid", grid.values()},
        {"log_ml", matrix_json(table.log_ml)},
        {"posterior", matrix_json(table.post_prob)},
        {"log_evidence", table.log_evidence},
        {"target_distances", distances_json(distances)},
        {"marginal_likelihood", kEvidenceNote},
    };
    RunResult out;
    out.files.push_back({"estimate.csv", ctx.csv_preamble() + io::matrix_to_csv(est.sigma_hat.matrix(), labels)});
    out.files.push_back({"report.json", ctx.finish(std::move(body)).dump(2) + "\n"});
    return out;
}

RunResult run_targets(const json& cfg, RunContext& ctx) {
    PrimaryData primary = load_primary(cfg, ctx);
    const auto labels = primary.data.resolved_labels();
    const auto distances = target_distance_matrix(primary.set, {{"S", primary.s}});
    RunResult out;
    json described = targets_json(primary.set);
    for (std::size_t l = 0; l < primary.set.size(); ++l) {
        const std::string name = "target_" + file_label(primary.set[l].label()) + ".csv";
        described[l]["file"] = name;
        out.files.push_back({name, ctx.csv_preamble() + io::matrix_to_csv(primary.set[l].matrix().matrix(), labels)});
    }
    out.files.push_back({"target_distances.csv", ctx.csv_preamble() + io::matrix_to_csv(distances.values, distances.labels)});
    json body = {{"targets", described}, {"target_distances", distances_json(distances)}};
    out.files.push_back({"targets.json", ctx.finish(std::move(body)).dump(2) + "\n"});
    return out;
}

// PRIAL table, long-format weights, weight quantiles and per-repetition losses.
void prial_outputs(const std::string& prefix, const PrialReport& report, json extra, const RunContext& ctx,
                   RunResult& out) {
    const std::string pre = ctx.csv_preamble();
    std::string prial_csv = pre + "estimator,prial\n";
    std::string weights_csv = pre + "repetition,estimator,target,weight\n";
    std::string quant_csv = pre + "estimator,target,min,q25,median,q75,max\n";
    std::string loss_csv = pre + "repetition,estimator,sample_loss,estimator_loss\n";
    for (const auto& e : report.estimators) {
        prial_csv += e.label + "," + io::format_number(e.prial) + "\n";
        for (std::size_t m = 0; m < e.losses.size(); ++m) {
            loss_csv += std::to_string(m) + "," + e.label + "," + io::format_number(e.losses[m].sample_loss) + "," +
                        io::format_number(e.losses[m].estimator_loss) + "\n";
        }
        if (e.weight_labels.empty()) continue;
        auto column = [&](std::size_t l) {
            std::vector<double> v;
            for (const auto& w : e.weights) v.push_back(w[l]);
            return v;
        };
        auto quant_row = [&](const std::string& target, const std::vector<double>& v) {
            quant_csv += e.label + "," + target;
            for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) quant_csv += "," + io::format_number(quantile(v, q));
            quant_csv += "\n";
        };
        for (std::size_t m = 0; m < e.weights.size(); ++m) {
            for (std::size_t l = 0; l < e.weight_labels.size(); ++l) {
                weights_csv += std::to_string(m) + "," + e.label + "," + e.weight_labels[l] + "," +
                               io::format_number(e.weights[m][l]) + "\n";
            }
            weights_csv += std::to_string(m) + "," + e.label + ",S," + io::format_number(e.sample_weights[m]) + "\n";
        }
        for (std::size_t l = 0; l < e.weight_labels.size(); ++l) quant_row(e.weight_labels[l], column(l));
        quant_row("S", e.sample_weights);
    }
    json body = std::move(extra);
    body["report"] = to_json(report);
    out.files.push_back({prefix + "_report.json", ctx.finish(std::move(body)).dump(2) + "\n"});
    out.files.push_back({prefix + "_prial.csv", std::move(prial_csv)});
    out.files.push_back({prefix + "_weights.csv", std::move(weights_csv)});
    out.files.push_back({prefix + "_weight_quantiles.csv", std::move(quant_csv)});
    out.files.push_back({prefix + "_losses.csv", std::move(loss_csv)});
}

unsigned threads_of(const json& cfg) { return static_cast<unsigned>(positive_size(cfg, "threads")); }

RunResult run_simulate(const json& cfg, RunContext& ctx) {
    ScenarioSpec spec;
    spec.id = parse_scenario(cfg.at("scenario").get<int>());
    spec.p = positive_size(cfg, "p");
    spec.s4_alpha = cfg.at("s4_alpha").get<double>();
    spec.s4_n_ref = cfg.at("s4_n_ref").get<std::size_t>();
    spec.fresh_sigma = cfg.at("fresh_sigma").get<bool>();
    const std::size_t n = positive_size(cfg, "n");
    const double step = cfg.at("alpha_step").get<double>();

    auto estimators = standard_estimators();
    for (auto& e : estimators) e.alpha_step = step;
    PrialReport report = run_model_simulation(spec, n, positive_size(cfg, "M"), estimators, ctx.seed,
                                              {threads_of(cfg)});
    ctx.warnings.append(report.warnings);
    json extra = {{"scenario",
                   {{"id", static_cast<int>(spec.id)},
                    {"p", spec.p},
                    {"n", n},
                    {"s1_scale", spec.s1_scale},
                    {"s2_correlation", spec.s2_correlation},
                    {"s3_decay", spec.s3_decay},
                    {"s3_variance_range", {spec.s3_variance_lo, spec.s3_variance_hi}},
                    {"s4_block_correlation", spec.s4_block_correlation},
                    {"s4_alpha", spec.s4_alpha},
                    {"s4_n_ref", spec.s4_n_ref == 0 ? n : spec.s4_n_ref},
                    {"fresh_sigma", spec.fresh_sigma}}},
                  {"rng", Rng::algorithm()},
                  {"sts_alpha_rule", "empirical Bayes (grid argmax of the marginal likelihood)"},
                  {"marginal_likelihood", kEvidenceNote}};
    RunResult out;
    prial_outputs("simulate", report, std::move(extra), ctx, out);
    return out;
}

RunResult run_partition(const json& cfg, RunContext& ctx) {
    const DataMatrix full = io::read_data_csv(cfg.at("input").get<std::string>());
    const bool center = cfg.at("center").get<bool>();
    const double step = cfg.at("alpha_step").get<double>();
    std::vector<EstimatorConfig> estimators{EstimatorConfig::tas({}, step)};
    const auto external = string_list(cfg, "external_data");
    if (!external.empty()) {
        EstimatorConfig info = EstimatorConfig::tas({}, step);
        info.label = "TAS-info";
        for (const auto& path : external) {
            info.extra_targets.push_back(std::make_shared<const ShrinkageTarget>(
                external_target(io::read_data_csv(path), stem(path), full.variables(), center, &ctx.warnings)));
        }
        estimators.push_back(std::move(info));
    }
    PrialReport report = data_partition_run(full, positive_size(cfg, "n_small"), positive_size(cfg, "M"),
                                            estimators, ctx.seed, center, {threads_of(cfg)});
    ctx.warnings.append(report.warnings);
    json extra = {{"data", {{"variables", full.variables()}, {"samples", full.samples()}}},
                  {"rng", Rng::algorithm()},
                  {"marginal_likelihood", kEvidenceNote}};
    RunResult out;
    prial_outputs("partition", report, std::move(extra), ctx, out);
    return out;
}

RunResult run_diagnose(const json& cfg, RunContext& ctx) {
    std::vector<std::size_t> ps;
    for (double p : number_list<double>(cfg, "p")) {
        if (!(p >= 1) || std::floor(p) != p) throw Error(ErrorCode::InvalidArgument, "'p' entries must be positive integers");
        ps.push_back(static_cast<std::size_t>(p));
    }
    const auto rules = number_list<double>(cfg, "n_rules");
    const auto rows = mle_diagnostics(ps, rules, positive_size(cfg, "M"), ctx.seed, cfg.at("center").get<bool>());
    std::string csv = ctx.csv_preamble() + "p,n,mean_frobenius_error,mean_condition_number,singular_fraction\n";
    json table = json::array();
    for (const auto& r : rows) {
        csv += std::to_string(r.p) + "," + std::to_string(r.n) + "," + io::format_number(r.mean_frobenius_error) +
               "," + io::format_number(r.mean_condition_number) + "," + io::format_number(r.singular_fraction) + "\n";
        table.push_back({{"p", r.p},
                         {"n", r.n},
                         {"mean_frobenius_error", r.mean_frobenius_error},
                         {"mean_condition_number", std::isfinite(r.mean_condition_number) ? json(r.mean_condition_number) : json("inf")},
                         {"singular_fraction", r.singular_fraction}});
    }
    json body = {{"rows", table},
                 {"truth", "identity"},
                 {"singular_rule", "lambda_min <= p * machine_epsilon * lambda_max"},
                 {"rng", Rng::algorithm()}};
    RunResult out;
    out.files.push_back({"diagnose_report.json", ctx.finish(std::move(body)).dump(2) + "\n"});
    out.files.push_back({"diagnose.csv", std::move(csv)});
    return out;
}

RunResult run_gridstudy(const json& cfg, RunContext& ctx) {
    GridStudySetup setup;
    setup.p = positive_size(cfg, "p");
    setup.n = positive_size(cfg, "n");
    setup.variance = cfg.at("variance").get<double>();
    const auto steps = number_list<double>(cfg, "d");
    const auto rows = grid_cardinality_study(steps, positive_size(cfg, "M"), ctx.seed, setup, {threads_of(cfg)});
    std::string csv = ctx.csv_preamble() + "d,cardinality,prial\n";
    json table = json::array();
    for (const auto& r : rows) {
        csv += io::format_number(r.step) + "," + std::to_string(r.cardinality) + "," + io::format_number(r.prial) + "\n";
        table.push_back({{"d", r.step}, {"cardinality", r.cardinality}, {"prial", r.prial}});
    }
    json body = {{"rows", table}, {"rng", Rng::algorithm()}, {"marginal_likelihood", kEvidenceNote}};
    RunResult out;
    out.files.push_back({"gridstudy_report.json", ctx.finish(std::move(body)).dump(2) + "\n"});
    out.files.push_back({"gridstudy.csv", std::move(csv)});
    return out;
}

}  // namespace

const char* version() noexcept { return TASCOV_VERSION; }

double quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

json to_json(const PrialReport& report) {
    json estimators = json::array();
    for (const auto& e : report.estimators) {
        json losses = json::array();
        for (const auto& l : e.losses) losses.push_back({l.sample_loss, l.estimator_loss});
        json entry = {{"label", e.label}, {"prial", e.prial}, {"losses", losses}};
        if (!e.weight_labels.empty()) {
            json medians = json::object();
            for (std::size_t l = 0; l < e.weight_labels.size(); ++l) {
                std::vector<double> v;
                for (const auto& w : e.weights) v.push_back(w[l]);
                medians[e.weight_labels[l]] = quantile(v, 0.5);
            }
            entry["weights"] = {{"labels", e.weight_labels},
                                {"per_repetition", e.weights},
                                {"sample_weight", e.sample_weights},
                                {"median", medians}};
        }
        if (!e.alphas.empty()) entry["alphas"] = e.alphas;
        estimators.push_back(std::move(entry));
    }
    return {{"protocol", report.protocol},
            {"seed", report.seed},
            {"repetitions", report.repetitions},
            {"estimators", estimators},
            {"warnings", report.warnings.messages()}};
}

json resolve_config(const std::string& command, const json& config) {
    if (!config.is_object() && !config.is_null()) {
        throw Error(ErrorCode::InvalidArgument, "configuration must be a JSON object");
    }
    const auto& fields = fields_for(command);
    json out = json::object();
    for (const auto& f : fields) {
        if (config.is_object() && config.contains(f.key)) {
            const json& v = config.at(f.key);
            if (!same_kind(v, f.fallback)) {
                throw Error(ErrorCode::InvalidArgument, std::string("'") + f.key + "' must be " +
                                                            type_name(f.fallback) + ", got " + type_name(v));
            }
            out[f.key] = v;
        } else if (f.required) {
            throw Error(ErrorCode::InvalidArgument, "'" + command + "' requires '" + f.key + "'");
        } else {
            out[f.key] = f.fallback;
        }
    }
    if (config.is_object()) {
        for (const auto& [key, _] : config.items()) {
            if (!out.contains(key)) {
                throw Error(ErrorCode::InvalidArgument, "unknown setting '" + key + "' for '" + command + "'");
            }
        }
    }
    return out;
}

RunResult run_command(const std::string& command, const json& config) {
    RunContext ctx;
    ctx.command = command;
    ctx.config = resolve_config(command, config);
    ctx.seed = seed_of(ctx.config);
    ctx.timing = ctx.config.at("timing").get<bool>();

    RunResult result;
    if (command == "estimate") result = run_estimate(ctx.config, ctx);
    else if (command == "targets") result = run_targets(ctx.config, ctx);
    else if (command == "simulate") result = run_simulate(ctx.config, ctx);
    else if (command == "partition") result = run_partition(ctx.config, ctx);
    else if (command == "diagnose") result = run_diagnose(ctx.config, ctx);
    else result = run_gridstudy(ctx.config, ctx);
    result.warnings = ctx.warnings;
    return result;
}

}  // namespace tascov
