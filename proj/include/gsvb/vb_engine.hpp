#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "gsvb/gcch.hpp"
#include "gsvb/graph_model.hpp"
#include "gsvb/special_functions.hpp"

namespace gsvb {

/// Order of the three coordinate updates inside one iteration. Only the
/// default matches the reference algorithm; the other exists for tests.
enum class UpdateOrder { EdgesNoiseSignal, SignalNoiseEdges };

/// GaussSeidel: each edge update sees the edges already updated in the
/// current sweep. Jacobi: every edge reads the previous iteration's matrix.
enum class SweepMode { GaussSeidel, Jacobi };

/// Observation count in the Gamma shape update: N K (every stacked signal
/// entry) or M_total (entries actually observed). Equal under full sampling.
enum class NoiseShapeCount { StackedSignal, Observed };

struct VBConfig {
  double epsilon = 1e-2;      // diagonal loading of the GMRF precision
  double lambda_init = 1e-2;  // initial precision of every weight prior
  double rho_e = 1e-6;        // Gamma shape prior of the noise precision
  double xi_e = 1e-6;         // Gamma rate prior of the noise precision
  int max_iters = 50;
  double rel_tol = 1e-6;  // stop once ||mu_t - mu_{t-1}|| / ||mu_{t-1}|| < rel_tol

  bool update_edges = true;
  std::optional<double> fixed_alpha;  // hold <alpha_e> instead of updating q(alpha_e)
  UpdateOrder order = UpdateOrder::EdgesNoiseSignal;
  SweepMode sweep = SweepMode::GaussSeidel;
  SeriesControl series;
  /// Skip the noise update of the first iteration, so that <alpha_e> is first
  /// estimated from a signal posterior rather than from mu = Psi^T y, Sigma = 0.
  bool defer_first_noise_update = true;
  /// Gauss-Seidel sweeps evaluate the probe determinants from a maintained
  /// inverse (rank-2 updates) instead of three LU factorizations per edge.
  bool incremental_determinants = true;
  NoiseShapeCount noise_shape = NoiseShapeCount::Observed;

  void validate() const;
};

/// Gaussian q(x) = N(mu, Sigma). Sigma is block diagonal with one N x N
/// block per snapshot, which is all the block-diagonal precision produces.
struct SignalPosterior {
  std::size_t n = 0;
  std::size_t k = 0;
  Vector mu;                   // length N K, snapshot-major
  std::vector<Matrix> blocks;  // K covariance blocks

  double mean(std::size_t snapshot, std::size_t i) const;
  double cov(std::size_t snapshot, std::size_t i, std::size_t j) const;
  Matrix mean_matrix() const;  // K x N
  Matrix dense_covariance() const;
};

/// Gamma q(alpha_e) with shape and rate.
struct NoisePosterior {
  double shape = 1.0;
  double rate = 1.0;

  double mean_precision() const { return shape / rate; }
  double variance_estimate() const { return rate / shape; }
};

/// det(L + eps I) = exp(log_scale) (c l^2 + d l + g) as a function of the
/// symmetric pair l = L_ij = L_ji, every other entry held fixed. log_scale
/// is zero unless the determinant leaves the double range.
struct EdgeQuadratic {
  double c = 0.0;
  double d = 0.0;
  double g = 0.0;
  double log_scale = 0.0;
  bool has_center = false;  // c != 0 (relative to max |c|, |d|, |g|)
  double u = 0.0;           // d / (2c)
  double z = 0.0;           // g / c - d^2 / (4 c^2)
  double lambda = 0.0;      // weight-prior precision used for this update

  double det(double ell) const;
};

EdgeQuadratic extract_edge_quadratic(const Matrix& laplacian, double epsilon, std::size_t i,
                                     std::size_t j);

/// Tracks det(A) and A^{-1} for A = L + eps I while single symmetric pairs
/// change, so each probe determinant costs O(1) and each accepted change
/// O(N^2). Produces the same EdgeQuadratic as extract_edge_quadratic.
class EdgeDeterminantTracker {
 public:
  EdgeDeterminantTracker(const Matrix& laplacian, double epsilon);

  /// False when A is singular or too ill-conditioned for the update path.
  bool usable() const { return usable_; }
  EdgeQuadratic quadratic(std::size_t i, std::size_t j) const;
  /// Sets A_ij = A_ji = value (a Laplacian off-diagonal entry).
  void set(std::size_t i, std::size_t j, double value);
  /// Records the new entry without touching the inverse; call refresh()
  /// before the next quadratic().
  void set_unchecked(std::size_t i, std::size_t j, double value);
  /// Refactorizes from scratch to shed accumulated rounding.
  void refresh();

 private:
  Matrix a_;
  Matrix inverse_;
  double log_det_ = 0.0;
  int sign_ = 1;
  bool usable_ = false;
};

struct IterationDiagnostics {
  int iteration = 0;
  double relative_change = 0.0;
  double alpha_mean = 0.0;
  double nmse = -1.0;  // negative when no ground truth was supplied
  std::size_t edges_skipped = 0;
};

struct VBState {
  SignalPosterior signal;
  NoisePosterior noise;
  double alpha_mean = 1.0;
  Matrix laplacian;  // working estimate; rows sum to zero after every sweep
  Matrix lambda;     // weight-prior precisions, symmetric
  int iteration = 0;
  bool converged = false;
  SweepMode sweep = SweepMode::GaussSeidel;
  std::vector<IterationDiagnostics> trace;

  LaplacianEstimate laplacian_estimate() const;
};

struct EdgeUpdate {
  double ell = 0.0;  // new L_ij
  EdgeQuadratic quadratic;
  EdgePosteriorCase tag = EdgePosteriorCase::DegenerateZero;
  double second_moment = 0.0;  // sum_k <x_ki x_kj>
  bool lambda_substituted = false;
  bool skipped = false;  // posterior failed; L_ij kept
};

/// Gaussian update: Sigma_k = (L + eps I + alpha A_k^T A_k)^{-1},
/// mu_k = Sigma_k alpha A_k^T y_k. Throws NotPositiveDefinite.
SignalPosterior update_signal(const StackedObservations& obs, const SamplingOperator& op,
                              const PrecisionAssembly& precision, double alpha_mean);

/// Gamma update: shape = rho_e + count / 2 (count per cfg.noise_shape),
/// rate = xi_e + |y - Psi mu|^2 / 2 + tr(Psi Sigma Psi^T) / 2.
NoisePosterior update_noise(const StackedObservations& obs, const SamplingOperator& op,
                            const SignalPosterior& post, const VBConfig& cfg);

/// Updates the pair (i, j), i != j, of state.laplacian in place (diagonal
/// untouched) and the matching lambda. `source` is the matrix the
/// determinant is taken from; it is state.laplacian in a Gauss-Seidel sweep.
EdgeUpdate update_edge(std::size_t i, std::size_t j, VBState& state, const VBConfig& cfg,
                       const Matrix* source = nullptr);

/// Called after every edge update with the pair and its outcome.
using EdgeObserver = std::function<void(std::size_t i, std::size_t j, const EdgeUpdate&)>;

/// Edge sweep over all allowed pairs followed by the diagonal refresh.
/// Returns the number of skipped edges.
std::size_t sweep_edges(VBState& state, const VBConfig& cfg,
                        const std::optional<Eigen::MatrixX<bool>>& support = std::nullopt,
                        const EdgeObserver& observer = {});

struct RunOptions {
  /// Starting Laplacian; the zero matrix when absent.
  std::optional<LaplacianEstimate> initial_laplacian;
  /// K x N clean signals; fills IterationDiagnostics::nmse.
  std::optional<Matrix> truth;
  /// Pairs allowed to carry a weight; all others stay at zero.
  std::optional<Eigen::MatrixX<bool>> edge_support;
  EdgeObserver on_edge_update;
};

/// Coordinate-ascent VB: starts from mu = Psi^T y, Sigma = 0, <alpha_e> =
/// rho_e / xi_e and repeats edges, noise, signal until the relative change
/// of mu falls below rel_tol or max_iters is reached. NotPositiveDefinite
/// errors carry the iteration index in their message.
VBState run_vb(const StackedObservations& obs, const SamplingOperator& op, const VBConfig& cfg,
               const RunOptions& options = {});

}  // namespace gsvb
