// Exercises the shared library through its C header only.
#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "tascov/tascov.h"

namespace {

std::vector<double> sample_data() {
    // 3 variables x 8 samples, row-major.
    return {0.3, -1.2, 0.8, 1.9, -0.4, 0.1, -0.9, 0.6,
            1.1, 0.2, -0.7, 0.4, 1.5, -1.3, 0.9, -0.2,
            -0.5, 0.7, 0.3, -1.1, 0.2, 0.8, -0.6, 1.4};
}

}  // namespace

TEST(CApi, VersionAndStatusNames) {
    EXPECT_STREQ(tascov_version(), "0.1.0");
    EXPECT_STREQ(tascov_status_name(TASCOV_OK), "Ok");
    EXPECT_STREQ(tascov_status_name(TASCOV_NOT_POSITIVE_DEFINITE), "NotPositiveDefinite");
    EXPECT_STREQ(tascov_status_name(TASCOV_INSUFFICIENT_SAMPLES), "InsufficientSamples");
}

TEST(CApi, EstimatePipeline) {
    const auto values = sample_data();
    tascov_data* data = nullptr;
    ASSERT_EQ(tascov_data_create(values.data(), 3, 8, &data), TASCOV_OK);
    EXPECT_EQ(tascov_data_variables(data), 3u);
    EXPECT_EQ(tascov_data_samples(data), 8u);

    tascov_matrix* s = nullptr;
    ASSERT_EQ(tascov_data_sample_covariance(data, 1, &s), TASCOV_OK);
    tascov_target_set* set = nullptr;
    ASSERT_EQ(tascov_target_set_default(s, "T1,T5,T9", &set), TASCOV_OK);
    EXPECT_EQ(tascov_target_set_size(set), 3u);
    EXPECT_STREQ(tascov_target_set_label(set, 2), "T9");
    EXPECT_EQ(tascov_target_set_label(set, 3), nullptr);

    ASSERT_EQ(tascov_target_set_add_external_data(set, "self", data, 1), TASCOV_OK);
    EXPECT_STREQ(tascov_target_set_label(set, 3), "ext:self");

    tascov_estimate* est = nullptr;
    ASSERT_EQ(tascov_estimate_compute(s, 8, set, 0.01, &est), TASCOV_OK);
    std::vector<double> w(4);
    ASSERT_EQ(tascov_estimate_weights(est, w.data(), w.size()), TASCOV_OK);
    double total = tascov_estimate_sample_weight(est);
    for (double v : w) total += v;
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_EQ(tascov_estimate_grid_size(est), 99u);
    std::vector<double> post(99 * 4);
    ASSERT_EQ(tascov_estimate_posterior(est, post.data(), post.size()), TASCOV_OK);
    double mass = 0.0;
    for (double v : post) mass += v;
    EXPECT_NEAR(mass, 1.0, 1e-12);

    tascov_matrix* sigma = nullptr;
    ASSERT_EQ(tascov_estimate_sigma(est, &sigma), TASCOV_OK);
    std::vector<double> buf(9);
    ASSERT_EQ(tascov_matrix_copy(sigma, buf.data(), buf.size()), TASCOV_OK);
    EXPECT_EQ(buf[1], buf[3]);
    double ld = 0.0;
    EXPECT_EQ(tascov_matrix_log_det(sigma, &ld), TASCOV_OK);
    EXPECT_TRUE(std::isfinite(ld));
    EXPECT_EQ(tascov_matrix_copy(sigma, buf.data(), 4), TASCOV_DIMENSION_MISMATCH);

    tascov_matrix_free(sigma);
    tascov_estimate_free(est);
    tascov_target_set_free(set);
    tascov_matrix_free(s);
    tascov_data_free(data);
}

TEST(CApi, ErrorsCarryMessages) {
    const double bad[] = {1, 2, 2, 1};
    tascov_matrix* m = nullptr;
    ASSERT_EQ(tascov_matrix_create(bad, 2, &m), TASCOV_OK);
    double ld = 0.0;
    EXPECT_EQ(tascov_matrix_log_det(m, &ld), TASCOV_NOT_POSITIVE_DEFINITE);
    EXPECT_NE(std::string(tascov_last_error()), "");
    tascov_matrix_free(m);

    const double one[] = {1, 2, 3};
    tascov_data* d = nullptr;
    ASSERT_EQ(tascov_data_create(one, 3, 1, &d), TASCOV_OK);
    tascov_matrix* s = nullptr;
    EXPECT_EQ(tascov_data_sample_covariance(d, 0, &s), TASCOV_INSUFFICIENT_SAMPLES);
    EXPECT_EQ(s, nullptr);
    tascov_data_free(d);

    EXPECT_EQ(tascov_matrix_create(nullptr, 2, &m), TASCOV_INVALID_ARGUMENT);
    EXPECT_EQ(tascov_data_read_csv("/nonexistent/file.csv", &d), TASCOV_IO_ERROR);
}

TEST(CApi, LogMarginalLikelihoodScalar) {
    const double one[] = {1.0};
    tascov_matrix* s = nullptr;
    ASSERT_EQ(tascov_matrix_create(one, 1, &s), TASCOV_OK);
    double a = 0.0, b = 0.0;
    ASSERT_EQ(tascov_log_marginal_likelihood(s, 2, 0.5, s, &a), TASCOV_OK);
    ASSERT_EQ(tascov_log_marginal_likelihood(s, 2, 0.5, s, &b), TASCOV_OK);
    EXPECT_EQ(a, b);
    EXPECT_EQ(tascov_log_marginal_likelihood(s, 2, 1.5, s, &a), TASCOV_DOMAIN_ERROR);
    tascov_matrix_free(s);
}

TEST(CApi, RunProducesFiles) {
    tascov_outputs* out = nullptr;
    ASSERT_EQ(tascov_run("gridstudy", R"({"d":[0.5,0.25],"p":4,"n":3,"M":2,"timing":false})", &out), TASCOV_OK)
        << tascov_last_error();
    ASSERT_EQ(tascov_outputs_count(out), 2u);
    EXPECT_STREQ(tascov_outputs_name(out, 1), "gridstudy.csv");
    size_t length = 0;
    const char* text = tascov_outputs_content(out, 1, &length);
    EXPECT_EQ(std::string(text).size(), length);
    EXPECT_NE(std::string(text).find("\n0.5,1,"), std::string::npos);
    tascov_outputs_free(out);

    EXPECT_EQ(tascov_run("gridstudy", "{not json", &out), TASCOV_PARSE_ERROR);
    EXPECT_EQ(tascov_run("nope", "{}", &out), TASCOV_INVALID_ARGUMENT);
}
