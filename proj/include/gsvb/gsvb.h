/* C interface to the gsvb library. Every call returns a gsvb_status; on
 * failure gsvb_last_error() holds a message for the calling thread. Handles
 * are opaque and owned by the caller until passed to the matching destroy. */
#ifndef GSVB_GSVB_H
#define GSVB_GSVB_H

#include <stddef.h>
#include <stdint.h>

#if defined(GSVB_BUILDING_LIBRARY)
#define GSVB_API __attribute__((visibility("default")))
#else
#define GSVB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gsvb_status {
  GSVB_OK = 0,
  GSVB_ERR_INVALID_ARGUMENT = 1,
  GSVB_ERR_DOMAIN = 2,
  GSVB_ERR_NON_CONVERGENT = 3,
  GSVB_ERR_QUADRATURE = 4,
  GSVB_ERR_NOT_POSITIVE_DEFINITE = 5,
  GSVB_ERR_DIMENSION_MISMATCH = 6,
  GSVB_ERR_IO = 7,
  GSVB_ERR_PARSE = 8,
  GSVB_ERR_CONFIG = 9,
  GSVB_ERR_TOO_FEW_SNAPSHOTS = 10,
  GSVB_ERR_ZERO_REFERENCE = 11,
  GSVB_ERR_EIGEN = 12,
  GSVB_ERR_INVALID_PARAMS = 13,
  GSVB_ERR_INTERNAL = 99
} gsvb_status;

GSVB_API const char* gsvb_status_string(gsvb_status status);
/* Message of the last failed call on this thread; "" if none. */
GSVB_API const char* gsvb_last_error(void);
GSVB_API const char* gsvb_version(void);
/* "trace", "debug", "info", "warn", "error", "off". */
GSVB_API gsvb_status gsvb_set_log_level(const char* level);

/* Special functions */

GSVB_API gsvb_status gsvb_phi1(double alpha, double beta, double gamma, double x, double y,
                               double* out);
GSVB_API gsvb_status gsvb_h_normalizer(double p, double q, double r, double s, double v,
                                       double theta, double* out);

typedef struct gsvb_gcch_params {
  double alpha, p, q, r, s, v, theta, u;
} gsvb_gcch_params;

GSVB_API gsvb_status gsvb_gcch_log_pdf(const gsvb_gcch_params* params, double x, double* out);
GSVB_API gsvb_status gsvb_gcch_mean(const gsvb_gcch_params* params, double* out);
/* Posterior mean of one adjacency weight given det(L + eps I) = c w^2 - d w + g. */
GSVB_API gsvb_status gsvb_edge_posterior_mean(double c, double d, double g, double lambda, int k,
                                              double* out);

/* Inference on user data */

typedef struct gsvb_vb_config {
  double epsilon;
  double lambda_init;
  double rho_e;
  double xi_e;
  int max_iters;
  double rel_tol;
  int update_edges;             /* bool */
  double fixed_alpha;           /* <= 0: estimate the noise precision */
  int jacobi_sweep;             /* bool; 0 = Gauss-Seidel */
  int noise_shape_stacked;      /* bool; 0 = count observed entries */
  int defer_first_noise_update; /* bool */
  int incremental_determinants; /* bool */
} gsvb_vb_config;

GSVB_API void gsvb_vb_config_default(gsvb_vb_config* cfg);

typedef struct gsvb_problem gsvb_problem;
typedef struct gsvb_result gsvb_result;

GSVB_API gsvb_status gsvb_problem_create(size_t n_vertices, size_t n_snapshots,
                                         gsvb_problem** out);
GSVB_API void gsvb_problem_destroy(gsvb_problem* problem);
/* Observed vertices and values of snapshot k. Unset snapshots have no samples. */
GSVB_API gsvb_status gsvb_problem_set_snapshot(gsvb_problem* problem, size_t k,
                                               const size_t* vertices, const double* values,
                                               size_t count);
/* Row-major n x n; nonzero marks a pair allowed to carry a weight. */
GSVB_API gsvb_status gsvb_problem_set_edge_support(gsvb_problem* problem,
                                                   const unsigned char* mask);
/* Row-major n x n Laplacian used as the starting point (or held fixed). */
GSVB_API gsvb_status gsvb_problem_set_initial_laplacian(gsvb_problem* problem,
                                                        const double* laplacian);
/* Row-major K x n clean signals; fills the per-iteration NMSE of the trace. */
GSVB_API gsvb_status gsvb_problem_set_truth(gsvb_problem* problem, const double* signals);

GSVB_API gsvb_status gsvb_run(const gsvb_problem* problem, const gsvb_vb_config* cfg,
                              gsvb_result** out);
GSVB_API void gsvb_result_destroy(gsvb_result* result);
/* Row-major K x n posterior mean. */
GSVB_API gsvb_status gsvb_result_signal(const gsvb_result* result, double* out);
/* Row-major n x n Laplacian estimate. */
GSVB_API gsvb_status gsvb_result_laplacian(const gsvb_result* result, double* out);
GSVB_API gsvb_status gsvb_result_noise(const gsvb_result* result, double* shape, double* rate);
GSVB_API gsvb_status gsvb_result_status(const gsvb_result* result, int* iterations,
                                        int* converged);
GSVB_API size_t gsvb_result_trace_length(const gsvb_result* result);
/* nmse is negative when no truth was supplied. */
GSVB_API gsvb_status gsvb_result_trace(const gsvb_result* result, size_t index, int* iteration,
                                       double* relative_change, double* alpha_mean,
                                       double* nmse);

/* Experiments */

typedef struct gsvb_experiment gsvb_experiment;

GSVB_API gsvb_status gsvb_experiment_load(const char* config_path, gsvb_experiment** out);
GSVB_API gsvb_status gsvb_experiment_from_json(const char* json_text, gsvb_experiment** out);
GSVB_API void gsvb_experiment_destroy(gsvb_experiment* experiment);
GSVB_API gsvb_status gsvb_experiment_set_seeds(gsvb_experiment* experiment,
                                               const uint64_t* seeds, size_t count);
GSVB_API gsvb_status gsvb_experiment_set_threads(gsvb_experiment* experiment, unsigned threads);
GSVB_API gsvb_status gsvb_experiment_set_output_dir(gsvb_experiment* experiment,
                                                    const char* path);
GSVB_API gsvb_status gsvb_experiment_cell_count(const gsvb_experiment* experiment,
                                                size_t* count);
/* Runs every cell; failed cells are counted, not fatal. */
GSVB_API gsvb_status gsvb_experiment_run(gsvb_experiment* experiment, size_t* failed_cells);
/* Writes results.csv, summary.json and trace files to the output directory. */
GSVB_API gsvb_status gsvb_experiment_write_report(const gsvb_experiment* experiment);
/* Copy of the first failed cell's message into buf, or "" when none failed. */
GSVB_API gsvb_status gsvb_experiment_first_failure(const gsvb_experiment* experiment, char* buf,
                                                   size_t size);

/* Writes adjacency.csv, laplacian.csv, clean.csv and noisy.csv for one
 * Kronecker graph with bandlimited signals. */
GSVB_API gsvb_status gsvb_generate_synthetic(const char* output_dir, int kron_order, int omega,
                                             int n_snapshots, double snr_db, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif
