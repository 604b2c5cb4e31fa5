#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include <unistd.h>

#include "support/oracles.hpp"
#include "tascov/io.hpp"
#include "tascov/runner.hpp"

using namespace tascov;
using nlohmann::json;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode{};
}

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("tascov_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

std::string data_csv(std::size_t p, std::size_t n, std::uint64_t seed, const std::string& prefix = "g") {
    std::mt19937_64 gen(seed);
    const Eigen::MatrixXd x = oracle::random_normal(p, n, gen);
    std::string out;
    for (std::size_t i = 0; i < p; ++i) out += (i ? "," : "") + prefix + std::to_string(i + 1);
    out += "\n";
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < p; ++i) out += (i ? "," : "") + io::format_number(x(i, j));
        out += "\n";
    }
    return out;
}

const OutputFile& file_named(const RunResult& r, const std::string& name) {
    for (const auto& f : r.files)
        if (f.name == name) return f;
    throw std::runtime_error("missing output " + name);
}

json json_body(const RunResult& r, const std::string& name) { return json::parse(file_named(r, name).content); }

}  // namespace

TEST(Io, FormatNumber) {
    EXPECT_EQ(io::format_number(0.1), "0.10000000000000001");
    EXPECT_EQ(io::format_number(2.0), "2");
    EXPECT_EQ(io::format_number(INFINITY), "inf");
    EXPECT_EQ(io::format_number(-INFINITY), "-inf");
    EXPECT_EQ(io::format_number(NAN), "nan");
    const double v = 1.0 / 3.0;
    EXPECT_EQ(std::stod(io::format_number(v)), v);
}

TEST(Io, ParsesSamplesInRows) {
    const auto x = io::parse_data_csv("a,b\n1,2\n3,4\n5,6\n");
    EXPECT_EQ(x.variables(), 2u);
    EXPECT_EQ(x.samples(), 3u);
    EXPECT_EQ(x.labels(), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(x.entries()(1, 2), 6.0);
}

TEST(Io, SkipsCommentsAndBlankLines) {
    const auto x = io::parse_data_csv("# written by a tool\na,b\n\n1,2\n# note\n3,4\n");
    EXPECT_EQ(x.samples(), 2u);
}

TEST(Io, ParseErrorsNameLineAndColumn) {
    try {
        io::parse_data_csv("a,b\n1,2\n3,x\n", "in.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ParseError);
        EXPECT_NE(std::string(e.what()).find("in.csv:3: column 2"), std::string::npos) << e.what();
    }
    EXPECT_EQ(code_of([] { io::parse_data_csv("a,b\n1,\n3,4\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { io::parse_data_csv("a,b\n1,NA\n3,4\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { io::parse_data_csv("a,b\n1,2,3\n3,4\n"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { io::parse_data_csv(""); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([] { io::parse_data_csv("a,b\n1,2\n"); }), ErrorCode::InsufficientSamples);
}

TEST(Io, MatrixRoundTrip) {
    std::mt19937_64 gen(81);
    const Eigen::MatrixXd m = oracle::random_pd(3, gen);
    const auto text = io::matrix_to_csv(m, {"x", "y", "z"});
    EXPECT_EQ(text.substr(0, 16), "variable,x,y,z\nx");
    const auto back = io::parse_matrix_csv(text);
    EXPECT_EQ(back.labels, (std::vector<std::string>{"x", "y", "z"}));
    EXPECT_EQ(back.matrix.matrix(), m);
    // Bare square layout without row labels.
    const auto bare = io::parse_matrix_csv("a,b\n2,1\n1,2\n");
    EXPECT_EQ(bare.matrix(0, 1), 1.0);
    EXPECT_NE(code_of([] { io::parse_matrix_csv("a,b\n2,1\n0,2\n"); }), ErrorCode{});
}

TEST(Io, MissingFile) {
    EXPECT_EQ(code_of([] { io::read_data_csv("/nonexistent/dir/x.csv"); }), ErrorCode::IoError);
}

TEST(Runner, Quantile) {
    EXPECT_EQ(quantile({3, 1, 2}, 0.5), 2.0);
    EXPECT_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
    EXPECT_EQ(quantile({1, 2, 3, 4}, 0.0), 1.0);
    EXPECT_EQ(quantile({1, 2, 3, 4}, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
    EXPECT_EQ(code_of([] { quantile({}, 0.5); }), ErrorCode::EmptyInput);
}

TEST(Runner, ConfigDefaultsAndValidation) {
    const auto cfg = resolve_config("simulate", {{"scenario", 2}});
    EXPECT_EQ(cfg["n"], 25);
    EXPECT_EQ(cfg["p"], 100);
    EXPECT_EQ(cfg["M"], 100);
    EXPECT_EQ(code_of([] { resolve_config("simulate", {{"scenario", 2}, {"bogus", 1}}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { resolve_config("simulate", json::object()); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { resolve_config("simulate", {{"scenario", 2}, {"n", "ten"}}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { resolve_config("frobnicate", json::object()); }), ErrorCode::InvalidArgument);
}

TEST(Runner, EstimateOutputs) {
    TempDir dir;
    io::write_file(dir.file("d.csv"), data_csv(3, 10, 82));
    const auto r = run_command("estimate", {{"input", dir.file("d.csv")}});
    const auto report = json_body(r, "report.json");
    double total = report["sample_weight"].get<double>();
    for (auto& [label, w] : report["target_weights"].items()) total += w.get<double>();
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(report["version"], version());
    EXPECT_EQ(report["seed"], 0);
    EXPECT_EQ(report["config"]["alpha_step"], 0.01);
    EXPECT_TRUE(report["duration_seconds"].is_number());
    EXPECT_EQ(report["target_distances"]["labels"].size(), 10u);
    const auto sigma = io::parse_matrix_csv(file_named(r, "estimate.csv").content);
    EXPECT_EQ(sigma.labels, (std::vector<std::string>{"g1", "g2", "g3"}));
    EXPECT_TRUE(is_positive_definite(sigma.matrix));
}

TEST(Runner, EstimateIsByteIdenticalWithoutTiming) {
    TempDir dir;
    io::write_file(dir.file("d.csv"), data_csv(4, 12, 83));
    const json cfg = {{"input", dir.file("d.csv")}, {"timing", false}};
    const auto a = run_command("estimate", cfg);
    const auto b = run_command("estimate", cfg);
    ASSERT_EQ(a.files.size(), b.files.size());
    for (std::size_t i = 0; i < a.files.size(); ++i) EXPECT_EQ(a.files[i].content, b.files[i].content);
    EXPECT_TRUE(json_body(a, "report.json")["duration_seconds"].is_null());
}

TEST(Runner, ConstantColumnWarns) {
    TempDir dir;
    io::write_file(dir.file("d.csv"), "a,b,c\n1,5,2\n2,5,1\n3,5,7\n4,5,3\n");
    const auto r = run_command("estimate", {{"input", dir.file("d.csv")}});
    const auto warnings = json_body(r, "report.json")["warnings"];
    bool found = false;
    for (const auto& w : warnings) found = found || w.get<std::string>().find("zero-variance") != std::string::npos;
    EXPECT_TRUE(found) << warnings.dump();
    EXPECT_NE(file_named(r, "estimate.csv").content.find("# warning: "), std::string::npos);
}

TEST(Runner, ExternalTargets) {
    TempDir dir;
    io::write_file(dir.file("d.csv"), data_csv(3, 8, 84));
    io::write_file(dir.file("aux.csv"), data_csv(3, 40, 85));
    io::write_file(dir.file("prior.csv"), io::matrix_to_csv(Eigen::MatrixXd::Identity(3, 3) * 2.0, {"g1", "g2", "g3"}));
    const auto r = run_command("estimate", {{"input", dir.file("d.csv")},
                                            {"external_targets", {dir.file("prior.csv")}},
                                            {"external_data", {dir.file("aux.csv")}},
                                            {"targets", {"T1", "T9"}}});
    const auto report = json_body(r, "report.json");
    EXPECT_EQ(report["target_order"], json({"T1", "T9", "ext:prior", "ext:aux"}));

    io::write_file(dir.file("big.csv"), io::matrix_to_csv(Eigen::MatrixXd::Identity(4, 4), {"a", "b", "c", "d"}));
    EXPECT_EQ(code_of([&] {
                  run_command("estimate", {{"input", dir.file("d.csv")}, {"external_targets", {dir.file("big.csv")}}});
              }),
              ErrorCode::DimensionMismatch);
    io::write_file(dir.file("aux4.csv"), data_csv(4, 20, 86));
    EXPECT_EQ(code_of([&] {
                  run_command("estimate", {{"input", dir.file("d.csv")}, {"external_data", {dir.file("aux4.csv")}}});
              }),
              ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([&] { run_command("estimate", {{"input", dir.file("d.csv")}, {"targets", {"T1", "T1"}}}); }),
              ErrorCode::InvalidArgument);
}

TEST(Runner, TargetsCommand) {
    TempDir dir;
    io::write_file(dir.file("d.csv"), data_csv(3, 10, 87));
    const auto r = run_command("targets", {{"input", dir.file("d.csv")}});
    EXPECT_EQ(json_body(r, "targets.json")["targets"].size(), 9u);
    const auto t1 = io::parse_matrix_csv(file_named(r, "target_T1.csv").content);
    EXPECT_EQ(t1.matrix, SymMatrix::identity(3));
    const auto d = io::parse_matrix_csv(file_named(r, "target_distances.csv").content);
    EXPECT_EQ(d.labels.back(), "S");
}

TEST(Runner, SimulateOutputs) {
    const auto r = run_command("simulate", {{"scenario", 3}, {"p", 10}, {"n", 6}, {"M", 4}, {"seed", 7}, {"timing", false}});
    const auto report = json_body(r, "simulate_report.json");
    EXPECT_EQ(report["seed"], 7);
    EXPECT_EQ(report["report"]["estimators"].size(), 10u);
    const auto& prial = file_named(r, "simulate_prial.csv").content;
    EXPECT_NE(prial.find("\nTAS,"), std::string::npos);
    EXPECT_NE(file_named(r, "simulate_weight_quantiles.csv").content.find("TAS,T9,"), std::string::npos);
    const auto again = run_command("simulate", {{"scenario", 3}, {"p", 10}, {"n", 6}, {"M", 4}, {"seed", 7}, {"timing", false}});
    EXPECT_EQ(file_named(again, "simulate_report.json").content, file_named(r, "simulate_report.json").content);
}

TEST(Runner, PartitionRejectsOversizedSplit) {
    TempDir dir;
    io::write_file(dir.file("d.csv"), data_csv(3, 10, 88));
    EXPECT_EQ(code_of([&] { run_command("partition", {{"input", dir.file("d.csv")}, {"n_small", 10}}); }),
              ErrorCode::InsufficientSamples);
    const auto r = run_command("partition", {{"input", dir.file("d.csv")}, {"n_small", 4}, {"M", 3}});
    EXPECT_EQ(json_body(r, "partition_report.json")["report"]["estimators"].size(), 1u);
}

TEST(Runner, GridStudyRows) {
    const auto r = run_command("gridstudy", {{"d", {0.2, 0.1, 0.05, 0.01}}, {"p", 6}, {"n", 4}, {"M", 2}});
    const auto rows = json_body(r, "gridstudy_report.json")["rows"];
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0]["cardinality"], 4);
    EXPECT_EQ(rows[3]["cardinality"], 99);
}

TEST(Runner, DiagnoseRows) {
    const auto r = run_command("diagnose", {{"p", {6}}, {"n_rules", {2, 0.5}}, {"M", 3}});
    const auto rows = json_body(r, "diagnose_report.json")["rows"];
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1]["mean_condition_number"], "inf");
    EXPECT_NE(file_named(r, "diagnose.csv").content.find(",inf,1\n"), std::string::npos);
}
