// Command-line front end. Builds a JSON configuration from the flags, hands it
// to tascov_run through the C API and writes the returned files.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tascov/tascov.h"

namespace {

using nlohmann::json;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

json number_list(const std::string& text, const char* flag) {
    json out = json::array();
    for (const auto& item : split_list(text)) {
        try {
            std::size_t used = 0;
            const double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            if (v == static_cast<double>(static_cast<long long>(v)) && item.find('.') == std::string::npos) {
                out.push_back(static_cast<long long>(v));
            } else {
                out.push_back(v);
            }
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "'" + item + "' is not a number");
        }
    }
    return out;
}

struct Flags {
    std::string input;
    std::optional<bool> center;
    std::optional<double> alpha_step;
    std::string targets;
    std::vector<std::string> external_targets;
    std::vector<std::string> external_data;
    std::optional<int> scenario;
    std::optional<std::size_t> n;
    std::string p;
    std::optional<std::size_t> M;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_small;
    std::string n_rules;
    std::string d;
    std::optional<double> variance;
    std::optional<double> s4_alpha;
    std::optional<unsigned> threads;
    bool no_timing = false;
    std::string out_dir;
    std::string format = "json,csv";
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--out-dir", f.out_dir, "Output directory (default: $TASCOV_OUT_DIR or .)");
    cmd->add_option("--format", f.format, "Comma-separated output formats: json, csv")->capture_default_str();
    cmd->add_flag("--no-timing", f.no_timing, "Omit wall-clock duration so repeated runs are byte-identical");
}

void add_center(CLI::App* cmd, Flags& f) {
    cmd->add_flag_callback("--center", [&f] { f.center = true; }, "Center variables before forming S (default)");
    cmd->add_flag_callback("--no-center", [&f] { f.center = false; }, "Use the data as given");
}

void add_target_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--input", f.input, "Data CSV: samples in rows, header of variable names")->required();
    add_center(cmd, f);
    cmd->add_option("--targets", f.targets, "Canonical targets, e.g. T1,T4,T9 (default: all nine)");
    cmd->add_option("--external-target", f.external_targets, "Square CSV used as an extra target (repeatable)");
    cmd->add_option("--external-data", f.external_data, "Auxiliary data CSV turned into an extra target (repeatable)");
}

json build_config(const std::string& command, const Flags& f) {
    json c = json::object();
    auto put = [&](const char* key, const auto& opt) {
        if (opt) c[key] = *opt;
    };
    if (!f.input.empty()) c["input"] = f.input;
    put("center", f.center);
    put("alpha_step", f.alpha_step);
    if (!f.targets.empty()) c["targets"] = split_list(f.targets);
    if (!f.external_targets.empty()) c["external_targets"] = f.external_targets;
    if (!f.external_data.empty()) c["external_data"] = f.external_data;
    put("scenario", f.scenario);
    put("n", f.n);
    if (!f.p.empty()) {
        const json ps = number_list(f.p, "--p");
        c["p"] = command == "diagnose" ? ps : (ps.size() == 1 ? ps[0] : ps);
    }
    put("M", f.M);
    put("seed", f.seed);
    put("n_small", f.n_small);
    if (!f.n_rules.empty()) c["n_rules"] = number_list(f.n_rules, "--n-rules");
    if (!f.d.empty()) c["d"] = number_list(f.d, "--d");
    put("variance", f.variance);
    put("s4_alpha", f.s4_alpha);
    put("threads", f.threads);
    if (f.no_timing) c["timing"] = false;
    return c;
}

int run(const std::string& command, const Flags& f) {
    const json config = build_config(command, f);
    std::set<std::string> formats;
    for (const auto& fmt : split_list(f.format)) {
        if (fmt != "json" && fmt != "csv") {
            std::cerr << "error: InvalidArgument: unknown format '" << fmt << "' (expected json or csv)\n";
            return TASCOV_INVALID_ARGUMENT;
        }
        formats.insert(fmt);
    }
    std::string out_dir = f.out_dir;
    if (out_dir.empty()) {
        const char* env = std::getenv("TASCOV_OUT_DIR");
        out_dir = (env && *env) ? env : ".";
    }

    tascov_outputs* outputs = nullptr;
    const tascov_status status = tascov_run(command.c_str(), config.dump().c_str(), &outputs);
    if (status != TASCOV_OK) {
        std::cerr << "error: " << tascov_status_name(status) << ": " << tascov_last_error() << "\n";
        return static_cast<int>(status);
    }
    for (std::size_t i = 0; i < tascov_outputs_warning_count(outputs); ++i) {
        std::cerr << "warning: " << tascov_outputs_warning(outputs, i) << "\n";
    }

    int code = 0;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        std::cerr << "error: IoError: cannot create '" << out_dir << "': " << ec.message() << "\n";
        code = TASCOV_IO_ERROR;
    }
    for (std::size_t i = 0; code == 0 && i < tascov_outputs_count(outputs); ++i) {
        const std::filesystem::path name = tascov_outputs_name(outputs, i);
        const std::string ext = name.extension().string();
        if (!formats.count(ext.empty() ? ext : ext.substr(1))) continue;
        std::size_t length = 0;
        const char* content = tascov_outputs_content(outputs, i, &length);
        const auto path = std::filesystem::path(out_dir) / name;
        std::ofstream out(path, std::ios::binary);
        out.write(content, static_cast<std::streamsize>(length));
        if (!out) {
            std::cerr << "error: IoError: cannot write '" << path.string() << "'\n";
            code = TASCOV_IO_ERROR;
        } else {
            std::cout << path.string() << "\n";
        }
    }
    tascov_outputs_free(outputs);
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Target-averaged linear shrinkage covariance estimation"};
    app.set_version_flag("--version", std::string("tascov ") + tascov_version());
    app.require_subcommand(1);
    Flags f;

    auto* estimate = app.add_subcommand("estimate", "Shrinkage covariance estimate of a data CSV");
    add_target_flags(estimate, f);
    estimate->add_option("--alpha-step", f.alpha_step, "Spacing of the alpha grid (default 0.01)");

    auto* targets = app.add_subcommand("targets", "Write the shrinkage targets and their distances");
    add_target_flags(targets, f);

    auto* simulate = app.add_subcommand("simulate", "Model-based PRIAL simulation");
    simulate->add_option("--scenario", f.scenario, "Scenario 1-4")->required()->check(CLI::Range(1, 4));
    simulate->add_option("--n", f.n, "Sample size (default 25)");
    simulate->add_option("--p", f.p, "Dimension (default 100)");
    simulate->add_option("--M", f.M, "Repetitions (default 100)");
    simulate->add_option("--seed", f.seed, "Random seed (default 1)");
    simulate->add_option("--alpha-step", f.alpha_step, "Spacing of the alpha grid (default 0.01)");
    simulate->add_option("--s4-alpha", f.s4_alpha, "Inverse-Wishart intensity for scenario 4 (default 0.5)");
    simulate->add_option("--threads", f.threads, "Worker threads (results do not depend on this)");

    auto* partition = app.add_subcommand("partition", "Data-partition PRIAL evaluation");
    partition->add_option("--input", f.input, "Data CSV: samples in rows")->required();
    partition->add_option("--n-small", f.n_small, "Columns in the small part")->required();
    partition->add_option("--M", f.M, "Repetitions (default 100)");
    partition->add_option("--seed", f.seed, "Random seed (default 1)");
    partition->add_option("--alpha-step", f.alpha_step, "Spacing of the alpha grid (default 0.01)");
    partition->add_option("--external-data", f.external_data, "Auxiliary data for an informed TAS variant");
    partition->add_option("--threads", f.threads, "Worker threads");
    add_center(partition, f);

    auto* diagnose = app.add_subcommand("diagnose", "Sample-covariance diagnostics across n/p ratios");
    diagnose->add_option("--p", f.p, "Comma-separated dimensions (default 50,100)");
    diagnose->add_option("--n-rules", f.n_rules, "Comma-separated n/p ratios (default 10,2,1,0.5,0.1)");
    diagnose->add_option("--M", f.M, "Repetitions (default 100)");
    diagnose->add_option("--seed", f.seed, "Random seed (default 1)");
    add_center(diagnose, f);

    auto* gridstudy = app.add_subcommand("gridstudy", "PRIAL against the alpha grid spacing");
    gridstudy->add_option("--d", f.d, "Comma-separated grid spacings");
    gridstudy->add_option("--M", f.M, "Repetitions (default 100)");
    gridstudy->add_option("--seed", f.seed, "Random seed (default 1)");
    gridstudy->add_option("--p", f.p, "Dimension (default 100)");
    gridstudy->add_option("--n", f.n, "Sample size (default 25)");
    gridstudy->add_option("--variance", f.variance, "Common variance of the truth (default 4)");
    gridstudy->add_option("--threads", f.threads, "Worker threads");

    for (auto* cmd : {estimate, targets, simulate, partition, diagnose, gridstudy}) add_common(cmd, f);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return run(app.get_subcommands().front()->get_name(), f);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: InvalidArgument: " << e.what() << "\n";
        return TASCOV_INVALID_ARGUMENT;
    }
}
