/* C interface to the tascov shared library.
 *
 * Every function returns a tascov_status; on failure the message is available
 * from tascov_last_error() on the same thread until the next failing call.
 * Handles are opaque and owned by the caller, who releases them with the
 * matching *_free function. Matrices are exchanged as dense row-major
 * buffers of doubles. */
#ifndef TASCOV_TASCOV_H
#define TASCOV_TASCOV_H

#include <stddef.h>
#include <stdint.h>

#if defined(TASCOV_BUILDING_LIBRARY)
#define TASCOV_API __attribute__((visibility("default")))
#else
#define TASCOV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tascov_status {
    TASCOV_OK = 0,
    TASCOV_NOT_POSITIVE_DEFINITE = 1,
    TASCOV_DOMAIN_ERROR = 2,
    TASCOV_CONVERGENCE_FAILURE = 3,
    TASCOV_DIMENSION_MISMATCH = 4,
    TASCOV_EMPTY_INPUT = 5,
    TASCOV_DEGENERATE_INPUT = 6,
    TASCOV_INCONSISTENT_TABLE = 7,
    TASCOV_DEGENERATE_DENOMINATOR = 8,
    TASCOV_INSUFFICIENT_SAMPLES = 9,
    TASCOV_PARSE_ERROR = 10,
    TASCOV_IO_ERROR = 11,
    TASCOV_INVALID_ARGUMENT = 12,
    TASCOV_INTERNAL_ERROR = 99
} tascov_status;

typedef struct tascov_matrix tascov_matrix;         /* symmetric p x p */
typedef struct tascov_data tascov_data;             /* p variables x n samples */
typedef struct tascov_target_set tascov_target_set; /* labelled shrinkage targets */
typedef struct tascov_estimate tascov_estimate;     /* TAS fit */
typedef struct tascov_outputs tascov_outputs;       /* files produced by tascov_run */

TASCOV_API const char* tascov_version(void);
TASCOV_API const char* tascov_status_name(tascov_status status);
/* Message of the last failure on this thread; empty string if none. */
TASCOV_API const char* tascov_last_error(void);

/* Symmetric matrices. `values` is p*p row-major; only the lower triangle is read. */
TASCOV_API tascov_status tascov_matrix_create(const double* values, size_t p, tascov_matrix** out);
TASCOV_API tascov_status tascov_matrix_read_csv(const char* path, tascov_matrix** out);
TASCOV_API size_t tascov_matrix_dim(const tascov_matrix* m);
/* Copies p*p row-major values into `buffer` of length `length`. */
TASCOV_API tascov_status tascov_matrix_copy(const tascov_matrix* m, double* buffer, size_t length);
TASCOV_API tascov_status tascov_matrix_log_det(const tascov_matrix* m, double* out);
TASCOV_API void tascov_matrix_free(tascov_matrix* m);

/* Data. `values` is p*n row-major (variables in rows). */
TASCOV_API tascov_status tascov_data_create(const double* values, size_t p, size_t n, tascov_data** out);
/* Samples-in-rows CSV with a header of variable names. */
TASCOV_API tascov_status tascov_data_read_csv(const char* path, tascov_data** out);
TASCOV_API size_t tascov_data_variables(const tascov_data* d);
TASCOV_API size_t tascov_data_samples(const tascov_data* d);
TASCOV_API tascov_status tascov_data_sample_covariance(const tascov_data* d, int center, tascov_matrix** out);
TASCOV_API void tascov_data_free(tascov_data* d);

/* Canonical targets T1..T9 built from `s`; `kinds` is a comma-separated list
 * such as "T1,T4,T9", or NULL for all nine. */
TASCOV_API tascov_status tascov_target_set_default(const tascov_matrix* s, const char* kinds,
                                                   tascov_target_set** out);
TASCOV_API tascov_status tascov_target_set_add_matrix(tascov_target_set* set, const char* label,
                                                      const tascov_matrix* m);
/* Adds the regularised covariance of auxiliary data as target "ext:<name>". */
TASCOV_API tascov_status tascov_target_set_add_external_data(tascov_target_set* set, const char* name,
                                                             const tascov_data* aux, int center);
TASCOV_API size_t tascov_target_set_size(const tascov_target_set* set);
TASCOV_API const char* tascov_target_set_label(const tascov_target_set* set, size_t index);
TASCOV_API tascov_status tascov_target_set_matrix(const tascov_target_set* set, size_t index,
                                                  tascov_matrix** out);
TASCOV_API void tascov_target_set_free(tascov_target_set* set);

/* Log marginal likelihood of `s` (from n samples) under intensity alpha and target `delta`. */
TASCOV_API tascov_status tascov_log_marginal_likelihood(const tascov_matrix* s, size_t n, double alpha,
                                                        const tascov_matrix* delta, double* out);

/* TAS estimate on the uniform alpha grid with spacing `alpha_step` (e.g. 0.01). */
TASCOV_API tascov_status tascov_estimate_compute(const tascov_matrix* s, size_t n,
                                                 const tascov_target_set* set, double alpha_step,
                                                 tascov_estimate** out);
TASCOV_API tascov_status tascov_estimate_sigma(const tascov_estimate* e, tascov_matrix** out);
/* Copies one weight per target, in target-set order. */
TASCOV_API tascov_status tascov_estimate_weights(const tascov_estimate* e, double* buffer, size_t length);
TASCOV_API double tascov_estimate_sample_weight(const tascov_estimate* e);
TASCOV_API size_t tascov_estimate_grid_size(const tascov_estimate* e);
/* Posterior probabilities, grid_size x targets row-major. */
TASCOV_API tascov_status tascov_estimate_posterior(const tascov_estimate* e, double* buffer, size_t length);
TASCOV_API void tascov_estimate_free(tascov_estimate* e);

/* Runs a command (estimate, targets, simulate, partition, diagnose,
 * gridstudy) configured by a JSON object, producing named output files. */
TASCOV_API tascov_status tascov_run(const char* command, const char* config_json, tascov_outputs** out);
TASCOV_API size_t tascov_outputs_count(const tascov_outputs* o);
TASCOV_API const char* tascov_outputs_name(const tascov_outputs* o, size_t index);
TASCOV_API const char* tascov_outputs_content(const tascov_outputs* o, size_t index, size_t* length);
TASCOV_API size_t tascov_outputs_warning_count(const tascov_outputs* o);
TASCOV_API const char* tascov_outputs_warning(const tascov_outputs* o, size_t index);
TASCOV_API void tascov_outputs_free(tascov_outputs* o);

#ifdef __cplusplus
}
#endif

#endif
