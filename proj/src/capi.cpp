#include "tascov/tascov.h"

#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "tascov/estimator.hpp"
#include "tascov/io.hpp"
#include "tascov/runner.hpp"

struct tascov_matrix {
    tascov::SymMatrix value;
};
struct tascov_data {
    tascov::DataMatrix value;
};
struct tascov_target_set {
    std::optional<tascov::TargetSet> value;
    std::vector<std::string> labels;  // stable storage for tascov_target_set_label
};
struct tascov_estimate {
    tascov::TasEstimate value;
};
struct tascov_outputs {
    tascov::RunResult value;
};

namespace {

thread_local std::string last_error;

tascov_status fail(tascov_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
tascov_status guarded(F&& body) {
    try {
        body();
        return TASCOV_OK;
    } catch (const tascov::Error& e) {
        return fail(static_cast<tascov_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return fail(TASCOV_INTERNAL_ERROR, "out of memory");
    } catch (const std::exception& e) {
        return fail(TASCOV_INTERNAL_ERROR, e.what());
    } catch (...) {
        return fail(TASCOV_INTERNAL_ERROR, "unknown exception");
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw tascov::Error(tascov::ErrorCode::InvalidArgument, what);
}

void sync_labels(tascov_target_set& set) { set.labels = set.value->labels(); }

std::vector<tascov::TargetKind> parse_kinds(const char* kinds) {
    std::vector<tascov::TargetKind> out;
    if (kinds == nullptr) return {tascov::kAllTargetKinds.begin(), tascov::kAllTargetKinds.end()};
    std::stringstream in(kinds);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(tascov::parse_target_kind(item));
    }
    if (out.empty()) throw tascov::Error(tascov::ErrorCode::EmptyInput, "no targets selected");
    return out;
}

void copy_out(const Eigen::MatrixXd& m, double* buffer, size_t length) {
    require(buffer != nullptr, "null buffer");
    const auto total = static_cast<size_t>(m.size());
    if (length < total) {
        throw tascov::Error(tascov::ErrorCode::DimensionMismatch,
                            "buffer holds " + std::to_string(length) + " values, need " + std::to_string(total));
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) buffer[i * m.cols() + j] = m(i, j);
}

}  // namespace

extern "C" {

const char* tascov_version(void) { return tascov::version(); }

const char* tascov_status_name(tascov_status status) {
    if (status == TASCOV_OK) return "Ok";
    if (status == TASCOV_INTERNAL_ERROR) return "InternalError";
    if (status >= 1 && status <= 12) return tascov::to_string(static_cast<tascov::ErrorCode>(status)).data();
    return "Unknown";
}

const char* tascov_last_error(void) { return last_error.c_str(); }

tascov_status tascov_matrix_create(const double* values, size_t p, tascov_matrix** out) {
    return guarded([&] {
        require(values != nullptr && out != nullptr, "null argument");
        if (p == 0) throw tascov::Error(tascov::ErrorCode::EmptyInput, "matrix dimension must be positive");
        Eigen::MatrixXd m(p, p);
        for (size_t i = 0; i < p; ++i)
            for (size_t j = 0; j < p; ++j) m(i, j) = values[i * p + j];
        *out = new tascov_matrix{tascov::SymMatrix::from_lower(m)};
    });
}

tascov_status tascov_matrix_read_csv(const char* path, tascov_matrix** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "null argument");
        *out = new tascov_matrix{tascov::io::read_matrix_csv(path).matrix};
    });
}

size_t tascov_matrix_dim(const tascov_matrix* m) { return m ? m->value.dim() : 0; }

tascov_status tascov_matrix_copy(const tascov_matrix* m, double* buffer, size_t length) {
    return guarded([&] {
        require(m != nullptr, "null matrix");
        copy_out(m->value.matrix(), buffer, length);
    });
}

tascov_status tascov_matrix_log_det(const tascov_matrix* m, double* out) {
    return guarded([&] {
        require(m != nullptr && out != nullptr, "null argument");
        *out = tascov::log_det(m->value);
    });
}

void tascov_matrix_free(tascov_matrix* m) { delete m; }

tascov_status tascov_data_create(const double* values, size_t p, size_t n, tascov_data** out) {
    return guarded([&] {
        require(values != nullptr && out != nullptr, "null argument");
        if (p == 0 || n == 0) throw tascov::Error(tascov::ErrorCode::EmptyInput, "data must have p, n >= 1");
        Eigen::MatrixXd x(p, n);
        for (size_t i = 0; i < p; ++i)
            for (size_t j = 0; j < n; ++j) x(i, j) = values[i * n + j];
        *out = new tascov_data{tascov::DataMatrix(std::move(x))};
    });
}

tascov_status tascov_data_read_csv(const char* path, tascov_data** out) {
    return guarded([&] {
        require(path != nullptr && out != nullptr, "null argument");
        *out = new tascov_data{tascov::io::read_data_csv(path)};
    });
}

size_t tascov_data_variables(const tascov_data* d) { return d ? d->value.variables() : 0; }
size_t tascov_data_samples(const tascov_data* d) { return d ? d->value.samples() : 0; }

tascov_status tascov_data_sample_covariance(const tascov_data* d, int center, tascov_matrix** out) {
    return guarded([&] {
        require(d != nullptr && out != nullptr, "null argument");
        *out = new tascov_matrix{tascov::sample_covariance(d->value, center != 0)};
    });
}

void tascov_data_free(tascov_data* d) { delete d; }

tascov_status tascov_target_set_default(const tascov_matrix* s, const char* kinds, tascov_target_set** out) {
    return guarded([&] {
        require(s != nullptr && out != nullptr, "null argument");
        auto* set = new tascov_target_set{tascov::build_default_target_set(s->value, nullptr, parse_kinds(kinds)), {}};
        sync_labels(*set);
        *out = set;
    });
}

tascov_status tascov_target_set_add_matrix(tascov_target_set* set, const char* label, const tascov_matrix* m) {
    return guarded([&] {
        require(set != nullptr && label != nullptr && m != nullptr, "null argument");
        set->value = set->value->with(tascov::matrix_target(label, m->value, "c-api"));
        sync_labels(*set);
    });
}

tascov_status tascov_target_set_add_external_data(tascov_target_set* set, const char* name, const tascov_data* aux,
                                                  int center) {
    return guarded([&] {
        require(set != nullptr && name != nullptr && aux != nullptr, "null argument");
        set->value = set->value->with(tascov::external_target(aux->value, name, set->value->dim(), center != 0));
        sync_labels(*set);
    });
}

size_t tascov_target_set_size(const tascov_target_set* set) { return set ? set->value->size() : 0; }

const char* tascov_target_set_label(const tascov_target_set* set, size_t index) {
    if (set == nullptr || index >= set->labels.size()) return nullptr;
    return set->labels[index].c_str();
}

tascov_status tascov_target_set_matrix(const tascov_target_set* set, size_t index, tascov_matrix** out) {
    return guarded([&] {
        require(set != nullptr && out != nullptr, "null argument");
        require(index < set->value->size(), "target index out of range");
        *out = new tascov_matrix{(*set->value)[index].matrix()};
    });
}

void tascov_target_set_free(tascov_target_set* set) { delete set; }

tascov_status tascov_log_marginal_likelihood(const tascov_matrix* s, size_t n, double alpha,
                                             const tascov_matrix* delta, double* out) {
    return guarded([&] {
        require(s != nullptr && delta != nullptr && out != nullptr, "null argument");
        const tascov::ShrinkageTarget target("delta", delta->value, tascov::ShrinkageTarget::Origin::External,
                                             "c-api");
        *out = tascov::log_marginal_likelihood(s->value, n, alpha, target);
    });
}

tascov_status tascov_estimate_compute(const tascov_matrix* s, size_t n, const tascov_target_set* set,
                                      double alpha_step, tascov_estimate** out) {
    return guarded([&] {
        require(s != nullptr && set != nullptr && out != nullptr, "null argument");
        *out = new tascov_estimate{
            tascov::estimate_tas(s->value, n, *set->value, tascov::AlphaGrid::uniform(alpha_step))};
    });
}

tascov_status tascov_estimate_sigma(const tascov_estimate* e, tascov_matrix** out) {
    return guarded([&] {
        require(e != nullptr && out != nullptr, "null argument");
        *out = new tascov_matrix{e->value.sigma_hat};
    });
}

tascov_status tascov_estimate_weights(const tascov_estimate* e, double* buffer, size_t length) {
    return guarded([&] {
        require(e != nullptr && buffer != nullptr, "null argument");
        const auto& w = e->value.target_weights;
        if (length < w.size()) throw tascov::Error(tascov::ErrorCode::DimensionMismatch, "weight buffer too small");
        std::copy(w.begin(), w.end(), buffer);
    });
}

double tascov_estimate_sample_weight(const tascov_estimate* e) { return e ? e->value.sample_weight : 0.0; }

size_t tascov_estimate_grid_size(const tascov_estimate* e) { return e ? e->value.table.alpha_grid.size() : 0; }

tascov_status tascov_estimate_posterior(const tascov_estimate* e, double* buffer, size_t length) {
    return guarded([&] {
        require(e != nullptr, "null estimate");
        copy_out(e->value.table.post_prob, buffer, length);
    });
}

void tascov_estimate_free(tascov_estimate* e) { delete e; }

tascov_status tascov_run(const char* command, const char* config_json, tascov_outputs** out) {
    return guarded([&] {
        require(command != nullptr && out != nullptr, "null argument");
        nlohmann::json config = nlohmann::json::object();
        if (config_json != nullptr && *config_json != '\0') {
            try {
                config = nlohmann::json::parse(config_json);
            } catch (const nlohmann::json::parse_error& e) {
                throw tascov::Error(tascov::ErrorCode::ParseError, std::string("configuration: ") + e.what());
            }
        }
        *out = new tascov_outputs{tascov::run_command(command, config)};
    });
}

size_t tascov_outputs_count(const tascov_outputs* o) { return o ? o->value.files.size() : 0; }

const char* tascov_outputs_name(const tascov_outputs* o, size_t index) {
    if (o == nullptr || index >= o->value.files.size()) return nullptr;
    return o->value.files[index].name.c_str();
}

const char* tascov_outputs_content(const tascov_outputs* o, size_t index, size_t* length) {
    if (o == nullptr || index >= o->value.files.size()) return nullptr;
    const auto& content = o->value.files[index].content;
    if (length) *length = content.size();
    return content.c_str();
}

size_t tascov_outputs_warning_count(const tascov_outputs* o) { return o ? o->value.warnings.messages().size() : 0; }

const char* tascov_outputs_warning(const tascov_outputs* o, size_t index) {
    if (o == nullptr || index >= o->value.warnings.messages().size()) return nullptr;
    return o->value.warnings.messages()[index].c_str();
}

void tascov_outputs_free(tascov_outputs* o) { delete o; }

}  // extern "C"
