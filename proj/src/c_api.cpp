#include "gsvb/gsvb.h"

#include <cstring>
#include <new>
#include <string>

#include <spdlog/spdlog.h>

#include "gsvb/datasets.hpp"
#include "gsvb/error.hpp"
#include "gsvb/experiment.hpp"
#include "gsvb/gcch.hpp"
#include "gsvb/matrix_io.hpp"
#include "gsvb/special_functions.hpp"
#include "gsvb/vb_engine.hpp"

using namespace gsvb;

struct gsvb_problem {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::vector<std::size_t>> selections;
  std::vector<std::vector<double>> values;
  std::optional<Eigen::MatrixX<bool>> support;
  std::optional<Matrix> initial_laplacian;
  std::optional<Matrix> truth;
};

struct gsvb_result {
  VBState state;
};

struct gsvb_experiment {
  ExperimentConfig config;
  std::optional<ExperimentResult> result;
};

namespace {

thread_local std::string last_error;

gsvb_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return GSVB_ERR_INVALID_ARGUMENT;
    case ErrorCode::DomainError: return GSVB_ERR_DOMAIN;
    case ErrorCode::NonConvergent: return GSVB_ERR_NON_CONVERGENT;
    case ErrorCode::QuadratureFailure: return GSVB_ERR_QUADRATURE;
    case ErrorCode::NotPositiveDefinite: return GSVB_ERR_NOT_POSITIVE_DEFINITE;
    case ErrorCode::DimensionMismatch: return GSVB_ERR_DIMENSION_MISMATCH;
    case ErrorCode::IoError: return GSVB_ERR_IO;
    case ErrorCode::ParseError: return GSVB_ERR_PARSE;
    case ErrorCode::ConfigError: return GSVB_ERR_CONFIG;
    case ErrorCode::TooFewSnapshots: return GSVB_ERR_TOO_FEW_SNAPSHOTS;
    case ErrorCode::ZeroReference: return GSVB_ERR_ZERO_REFERENCE;
    case ErrorCode::EigenFailure: return GSVB_ERR_EIGEN;
    case ErrorCode::InvalidParams: return GSVB_ERR_INVALID_PARAMS;
  }
  return GSVB_ERR_INTERNAL;
}

template <typename F>
gsvb_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return GSVB_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return map_code(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GSVB_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GSVB_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown exception";
    return GSVB_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::InvalidArgument, what);
}

GCCHParams to_params(const gsvb_gcch_params* p) {
  require(p != nullptr, "null parameter block");
  return GCCHParams{p->alpha, p->p, p->q, p->r, p->s, p->v, p->theta, p->u};
}

VBConfig to_config(const gsvb_vb_config* c) {
  VBConfig cfg;
  if (!c) return cfg;
  cfg.epsilon = c->epsilon;
  cfg.lambda_init = c->lambda_init;
  cfg.rho_e = c->rho_e;
  cfg.xi_e = c->xi_e;
  cfg.max_iters = c->max_iters;
  cfg.rel_tol = c->rel_tol;
  cfg.update_edges = c->update_edges != 0;
  if (c->fixed_alpha > 0.0) cfg.fixed_alpha = c->fixed_alpha;
  cfg.sweep = c->jacobi_sweep ? SweepMode::Jacobi : SweepMode::GaussSeidel;
  cfg.noise_shape = c->noise_shape_stacked ? NoiseShapeCount::StackedSignal
                                           : NoiseShapeCount::Observed;
  cfg.defer_first_noise_update = c->defer_first_noise_update != 0;
  cfg.incremental_determinants = c->incremental_determinants != 0;
  return cfg;
}

Matrix row_major(const double* data, std::size_t rows, std::size_t cols) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r * cols + c];
  return m;
}

void copy_row_major(const Matrix& m, double* out) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[r * m.cols() + c] = m(r, c);
}

}  // namespace

extern "C" {

const char* gsvb_status_string(gsvb_status status) {
  switch (status) {
    case GSVB_OK: return "ok";
    case GSVB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case GSVB_ERR_DOMAIN: return "domain error";
    case GSVB_ERR_NON_CONVERGENT: return "series did not converge";
    case GSVB_ERR_QUADRATURE: return "quadrature failure";
    case GSVB_ERR_NOT_POSITIVE_DEFINITE: return "matrix not positive definite";
    case GSVB_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case GSVB_ERR_IO: return "i/o error";
    case GSVB_ERR_PARSE: return "parse error";
    case GSVB_ERR_CONFIG: return "configuration error";
    case GSVB_ERR_TOO_FEW_SNAPSHOTS: return "too few snapshots";
    case GSVB_ERR_ZERO_REFERENCE: return "zero reference";
    case GSVB_ERR_EIGEN: return "eigendecomposition failure";
    case GSVB_ERR_INVALID_PARAMS: return "invalid parameters";
    case GSVB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* gsvb_last_error(void) { return last_error.c_str(); }

const char* gsvb_version(void) { return "0.1.0"; }

gsvb_status gsvb_set_log_level(const char* level) {
  return guarded([&] {
    require(level != nullptr, "null log level");
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::strcmp(level, "off") != 0)
      fail(ErrorCode::InvalidArgument, std::string("unknown log level ") + level);
    spdlog::set_level(parsed);
  });
}

gsvb_status gsvb_phi1(double alpha, double beta, double gamma, double x, double y, double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = phi1(alpha, beta, gamma, x, y);
  });
}

gsvb_status gsvb_h_normalizer(double p, double q, double r, double s, double v, double theta,
                              double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = h_normalizer(p, q, r, s, v, theta);
  });
}

gsvb_status gsvb_gcch_log_pdf(const gsvb_gcch_params* params, double x, double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = gcch_log_pdf(x, to_params(params));
  });
}

gsvb_status gsvb_gcch_mean(const gsvb_gcch_params* params, double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = gcch_mean(to_params(params));
  });
}

gsvb_status gsvb_edge_posterior_mean(double c, double d, double g, double lambda, int k,
                                     double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = edge_posterior_mean(c, d, g, lambda, k);
  });
}

void gsvb_vb_config_default(gsvb_vb_config* cfg) {
  if (!cfg) return;
  const VBConfig d;
  cfg->epsilon = d.epsilon;
  cfg->lambda_init = d.lambda_init;
  cfg->rho_e = d.rho_e;
  cfg->xi_e = d.xi_e;
  cfg->max_iters = d.max_iters;
  cfg->rel_tol = d.rel_tol;
  cfg->update_edges = d.update_edges;
  cfg->fixed_alpha = 0.0;
  cfg->jacobi_sweep = d.sweep == SweepMode::Jacobi;
  cfg->noise_shape_stacked = d.noise_shape == NoiseShapeCount::StackedSignal;
  cfg->defer_first_noise_update = d.defer_first_noise_update;
  cfg->incremental_determinants = d.incremental_determinants;
}

gsvb_status gsvb_problem_create(size_t n_vertices, size_t n_snapshots, gsvb_problem** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    require(n_vertices >= 2 && n_snapshots >= 1, "need n >= 2 vertices and K >= 1 snapshots");
    auto* p = new gsvb_problem;
    p->n = n_vertices;
    p->k = n_snapshots;
    p->selections.resize(n_snapshots);
    p->values.resize(n_snapshots);
    *out = p;
  });
}

void gsvb_problem_destroy(gsvb_problem* problem) { delete problem; }

gsvb_status gsvb_problem_set_snapshot(gsvb_problem* problem, size_t k, const size_t* vertices,
                                      const double* values, size_t count) {
  return guarded([&] {
    require(problem != nullptr, "null problem");
    require(k < problem->k, "snapshot index out of range");
    require(count == 0 || (vertices && values), "null sample arrays");
    std::vector<std::size_t> sel(vertices, vertices + count);
    std::vector<double> val(values, values + count);
    // Validates range and duplicates.
    SamplingOperator(problem->n, {sel});
    problem->selections[k] = std::move(sel);
    problem->values[k] = std::move(val);
  });
}

gsvb_status gsvb_problem_set_edge_support(gsvb_problem* problem, const unsigned char* mask) {
  return guarded([&] {
    require(problem != nullptr && mask != nullptr, "null argument");
    const auto n = static_cast<Eigen::Index>(problem->n);
    Eigen::MatrixX<bool> m(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) m(r, c) = mask[r * n + c] != 0;
    require(m == m.transpose(), "edge support must be symmetric");
    problem->support = std::move(m);
  });
}

gsvb_status gsvb_problem_set_initial_laplacian(gsvb_problem* problem, const double* laplacian) {
  return guarded([&] {
    require(problem != nullptr && laplacian != nullptr, "null argument");
    Matrix l = row_major(laplacian, problem->n, problem->n);
    LaplacianEstimate check(l);
    problem->initial_laplacian = std::move(l);
  });
}

gsvb_status gsvb_problem_set_truth(gsvb_problem* problem, const double* signals) {
  return guarded([&] {
    require(problem != nullptr && signals != nullptr, "null argument");
    problem->truth = row_major(signals, problem->k, problem->n);
  });
}

gsvb_status gsvb_run(const gsvb_problem* problem, const gsvb_vb_config* cfg, gsvb_result** out) {
  return guarded([&] {
    require(problem != nullptr && out != nullptr, "null argument");
    const SamplingOperator op(problem->n, problem->selections);
    StackedObservations obs;
    obs.offsets = op.offsets();
    obs.y.resize(static_cast<Eigen::Index>(op.total()));
    for (std::size_t k = 0; k < problem->k; ++k)
      for (std::size_t m = 0; m < problem->values[k].size(); ++m)
        obs.y(static_cast<Eigen::Index>(op.offsets()[k] + m)) = problem->values[k][m];

    RunOptions options;
    if (problem->initial_laplacian)
      options.initial_laplacian = LaplacianEstimate(*problem->initial_laplacian);
    options.truth = problem->truth;
    options.edge_support = problem->support;
    auto result = std::make_unique<gsvb_result>();
    result->state = run_vb(obs, op, to_config(cfg), options);
    *out = result.release();
  });
}

void gsvb_result_destroy(gsvb_result* result) { delete result; }

gsvb_status gsvb_result_signal(const gsvb_result* result, double* out) {
  return guarded([&] {
    require(result != nullptr && out != nullptr, "null argument");
    copy_row_major(result->state.signal.mean_matrix(), out);
  });
}

gsvb_status gsvb_result_laplacian(const gsvb_result* result, double* out) {
  return guarded([&] {
    require(result != nullptr && out != nullptr, "null argument");
    copy_row_major(result->state.laplacian, out);
  });
}

gsvb_status gsvb_result_noise(const gsvb_result* result, double* shape, double* rate) {
  return guarded([&] {
    require(result != nullptr && shape != nullptr && rate != nullptr, "null argument");
    *shape = result->state.noise.shape;
    *rate = result->state.noise.rate;
  });
}

gsvb_status gsvb_result_status(const gsvb_result* result, int* iterations, int* converged) {
  return guarded([&] {
    require(result != nullptr, "null result");
    if (iterations) *iterations = result->state.iteration;
    if (converged) *converged = result->state.converged ? 1 : 0;
  });
}

size_t gsvb_result_trace_length(const gsvb_result* result) {
  return result ? result->state.trace.size() : 0;
}

gsvb_status gsvb_result_trace(const gsvb_result* result, size_t index, int* iteration,
                              double* relative_change, double* alpha_mean, double* nmse) {
  return guarded([&] {
    require(result != nullptr, "null result");
    require(index < result->state.trace.size(), "trace index out of range");
    const auto& d = result->state.trace[index];
    if (iteration) *iteration = d.iteration;
    if (relative_change) *relative_change = d.relative_change;
    if (alpha_mean) *alpha_mean = d.alpha_mean;
    if (nmse) *nmse = d.nmse;
  });
}

gsvb_status gsvb_experiment_load(const char* config_path, gsvb_experiment** out) {
  return guarded([&] {
    require(config_path != nullptr && out != nullptr, "null argument");
    auto e = std::make_unique<gsvb_experiment>();
    e->config = ExperimentConfig::from_file(config_path);
    *out = e.release();
  });
}

gsvb_status gsvb_experiment_from_json(const char* json_text, gsvb_experiment** out) {
  return guarded([&] {
    require(json_text != nullptr && out != nullptr, "null argument");
    auto e = std::make_unique<gsvb_experiment>();
    e->config = ExperimentConfig::from_json_text(json_text);
    *out = e.release();
  });
}

void gsvb_experiment_destroy(gsvb_experiment* experiment) { delete experiment; }

gsvb_status gsvb_experiment_set_seeds(gsvb_experiment* experiment, const uint64_t* seeds,
                                      size_t count) {
  return guarded([&] {
    require(experiment != nullptr && seeds != nullptr && count > 0, "need at least one seed");
    experiment->config.seeds.assign(seeds, seeds + count);
    experiment->result.reset();
  });
}

gsvb_status gsvb_experiment_set_threads(gsvb_experiment* experiment, unsigned threads) {
  return guarded([&] {
    require(experiment != nullptr && threads >= 1, "threads must be >= 1");
    experiment->config.threads = threads;
  });
}

gsvb_status gsvb_experiment_set_output_dir(gsvb_experiment* experiment, const char* path) {
  return guarded([&] {
    require(experiment != nullptr && path != nullptr && *path != '\0', "empty output path");
    experiment->config.output_dir = path;
  });
}

gsvb_status gsvb_experiment_cell_count(const gsvb_experiment* experiment, size_t* count) {
  return guarded([&] {
    require(experiment != nullptr && count != nullptr, "null argument");
    *count = enumerate_cells(experiment->config).size();
  });
}

gsvb_status gsvb_experiment_run(gsvb_experiment* experiment, size_t* failed_cells) {
  return guarded([&] {
    require(experiment != nullptr, "null experiment");
    experiment->result = run_experiment(experiment->config);
    if (failed_cells) *failed_cells = experiment->result->failed();
  });
}

gsvb_status gsvb_experiment_write_report(const gsvb_experiment* experiment) {
  return guarded([&] {
    require(experiment != nullptr, "null experiment");
    if (!experiment->result) fail(ErrorCode::InvalidArgument, "experiment has not been run");
    emit_report(*experiment->result, experiment->config.output_dir);
  });
}

gsvb_status gsvb_experiment_first_failure(const gsvb_experiment* experiment, char* buf,
                                          size_t size) {
  return guarded([&] {
    require(experiment != nullptr && buf != nullptr && size > 0, "null argument");
    std::string msg;
    if (experiment->result)
      for (const auto& c : experiment->result->cells)
        if (!c.ok) {
          msg = c.key.label() + ": " + c.status + ": " + c.message;
          break;
        }
    const std::size_t len = std::min(msg.size(), size - 1);
    std::memcpy(buf, msg.data(), len);
    buf[len] = '\0';
  });
}

gsvb_status gsvb_generate_synthetic(const char* output_dir, int kron_order, int omega,
                                    int n_snapshots, double snr_db, uint64_t seed) {
  return guarded([&] {
    require(output_dir != nullptr, "null output directory");
    KroneckerSpec spec;
    spec.kron_order = kron_order;
    spec.rng_seed = seed;
    const WeightedGraph g =
        sample_adjacency(kronecker_probability_matrix(spec), derive_seed(seed, 1));
    const LaplacianEstimate lap = laplacian_from_weights(g);
    const BandlimitedSignals sig =
        generate_bandlimited_signals(lap, {omega, n_snapshots, snr_db, derive_seed(seed, 2)});
    const std::filesystem::path dir(output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
    write_matrix_csv(dir / "adjacency.csv", g.weights());
    write_matrix_csv(dir / "laplacian.csv", lap.values());
    write_matrix_csv(dir / "clean.csv", sig.clean);
    write_matrix_csv(dir / "noisy.csv", sig.noisy);
    spdlog::info("wrote N={} graph ({} edges) and K={} snapshots, noise variance {}",
                 g.weights().rows(), g.edge_count(), n_snapshots, sig.noise_variance);
  });
}

}  // extern "C"
