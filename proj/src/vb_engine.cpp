#include "gsvb/vb_engine.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "gsvb/error.hpp"
#include "gsvb/metrics.hpp"

namespace gsvb {
namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

SignedLog log_det_from_lu(const Eigen::PartialPivLU<Matrix>& lu) {
  const Matrix& packed = lu.matrixLU();
  SignedLog out{0.0, static_cast<int>(lu.permutationP().determinant())};
  for (Index i = 0; i < packed.rows(); ++i) {
    const double pivot = packed(i, i);
    if (pivot == 0.0) return SignedLog::zero();
    out.log_abs += std::log(std::abs(pivot));
    if (pivot < 0.0) out.sign = -out.sign;
  }
  return out;
}

SignedLog log_det(const Matrix& a) { return log_det_from_lu(Eigen::PartialPivLU<Matrix>(a)); }

constexpr double kProbeStep = 1.0;
constexpr double kSafeLogRange = 600.0;
constexpr double kMinReciprocalCondition = 1e-10;

void fill_center(EdgeQuadratic& q) {
  const EdgePosterior shape = classify_edge_posterior(q.c, q.d, q.g, 1.0, 1);
  q.has_center = shape.has_center;
  q.u = shape.u;
  q.z = shape.z;
}

void refresh_diagonal(Matrix& laplacian) {
  const Matrix offdiag = laplacian;
  laplacian = LaplacianEstimate::from_off_diagonal(offdiag).values();
}

}  // namespace

void VBConfig::validate() const {
  if (!(epsilon > 0.0) || !(lambda_init > 0.0) || !(rho_e > 0.0) || !(xi_e > 0.0) ||
      !(rel_tol > 0.0) || max_iters < 1)
    fail(ErrorCode::InvalidArgument, "VBConfig: all parameters must be positive");
  if (fixed_alpha && !(*fixed_alpha > 0.0))
    fail(ErrorCode::InvalidArgument, "VBConfig: fixed_alpha must be positive");
  series.validate();
}

double SignalPosterior::mean(std::size_t snapshot, std::size_t i) const {
  return mu(idx(snapshot * n + i));
}

double SignalPosterior::cov(std::size_t snapshot, std::size_t i, std::size_t j) const {
  return blocks[snapshot](idx(i), idx(j));
}

Matrix SignalPosterior::mean_matrix() const {
  Matrix out(idx(k), idx(n));
  for (std::size_t s = 0; s < k; ++s) out.row(idx(s)) = mu.segment(idx(s * n), idx(n)).transpose();
  return out;
}

Matrix SignalPosterior::dense_covariance() const {
  Matrix out = Matrix::Zero(idx(n * k), idx(n * k));
  for (std::size_t s = 0; s < k; ++s) out.block(idx(s * n), idx(s * n), idx(n), idx(n)) = blocks[s];
  return out;
}

double EdgeQuadratic::det(double ell) const {
  return std::exp(log_scale) * ((c * ell + d) * ell + g);
}

EdgeQuadratic extract_edge_quadratic(const Matrix& laplacian, double epsilon, std::size_t i,
                                     std::size_t j) {
  const std::size_t n = static_cast<std::size_t>(laplacian.rows());
  if (laplacian.cols() != laplacian.rows() || i >= n || j >= n || i == j)
    fail(ErrorCode::InvalidArgument, "extract_edge_quadratic: need i != j inside a square matrix");

  Matrix a = laplacian;
  a.diagonal().array() += epsilon;
  SignedLog probes[3];
  const double points[3] = {0.0, kProbeStep, -kProbeStep};
  for (int p = 0; p < 3; ++p) {
    a(idx(i), idx(j)) = a(idx(j), idx(i)) = points[p];
    probes[p] = log_det(a);
  }

  double top = -std::numeric_limits<double>::infinity();
  for (const auto& p : probes)
    if (p.sign != 0) top = std::max(top, p.log_abs);

  EdgeQuadratic q;
  if (!std::isfinite(top)) return q;
  q.log_scale = (std::abs(top) > kSafeLogRange) ? top : 0.0;
  double value[3];
  for (int p = 0; p < 3; ++p)
    value[p] = probes[p].sign == 0 ? 0.0 : probes[p].sign * std::exp(probes[p].log_abs - q.log_scale);

  const double h = kProbeStep;
  q.g = value[0];
  q.c = (value[1] + value[2] - 2.0 * value[0]) / (2.0 * h * h);
  q.d = (value[1] - value[2]) / (2.0 * h);

  fill_center(q);
  return q;
}

EdgeDeterminantTracker::EdgeDeterminantTracker(const Matrix& laplacian, double epsilon)
    : a_(laplacian) {
  a_.diagonal().array() += epsilon;
  refresh();
}

void EdgeDeterminantTracker::refresh() {
  Eigen::PartialPivLU<Matrix> lu(a_);
  const SignedLog det = log_det_from_lu(lu);
  usable_ = det.sign != 0 && lu.rcond() > kMinReciprocalCondition;
  if (!usable_) return;
  log_det_ = det.log_abs;
  sign_ = det.sign;
  inverse_ = lu.inverse();
  inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
}

EdgeQuadratic EdgeDeterminantTracker::quadratic(std::size_t i, std::size_t j) const {
  if (!usable_) fail(ErrorCode::InvalidArgument, "EdgeDeterminantTracker: not usable");
  const Index ii = idx(i), jj = idx(j);
  const double current = a_(ii, jj);
  const double pij = inverse_(ii, jj), pii = inverse_(ii, ii), pjj = inverse_(jj, jj);
  // det(A + delta (e_i e_j^T + e_j e_i^T)) = det(A) [(1 + delta P_ij)^2 - delta^2 P_ii P_jj]
  auto factor = [&](double ell) {
    const double delta = ell - current;
    const double lin = 1.0 + delta * pij;
    return lin * lin - delta * delta * pii * pjj;
  };
  EdgeQuadratic q;
  q.log_scale = std::abs(log_det_) > kSafeLogRange ? log_det_ : 0.0;
  const double base = sign_ * std::exp(log_det_ - q.log_scale);
  const double h = kProbeStep;
  const double v0 = base * factor(0.0), vp = base * factor(h), vm = base * factor(-h);
  q.g = v0;
  q.c = (vp + vm - 2.0 * v0) / (2.0 * h * h);
  q.d = (vp - vm) / (2.0 * h);
  fill_center(q);
  return q;
}

void EdgeDeterminantTracker::set_unchecked(std::size_t i, std::size_t j, double value) {
  a_(idx(i), idx(j)) = a_(idx(j), idx(i)) = value;
}

void EdgeDeterminantTracker::set(std::size_t i, std::size_t j, double value) {
  if (!usable_) fail(ErrorCode::InvalidArgument, "EdgeDeterminantTracker: not usable");
  const Index ii = idx(i), jj = idx(j);
  const double delta = value - a_(ii, jj);
  if (delta == 0.0) return;
  const double pij = inverse_(ii, jj), pii = inverse_(ii, ii), pjj = inverse_(jj, jj);
  const double lin = 1.0 + delta * pij;
  const double factor = lin * lin - delta * delta * pii * pjj;
  a_(ii, jj) = a_(jj, ii) = value;
  if (factor == 0.0 || !std::isfinite(factor)) {
    refresh();
    return;
  }
  log_det_ += std::log(std::abs(factor));
  if (factor < 0.0) sign_ = -sign_;

  // Woodbury with U = [e_i e_j], V = [e_j e_i]:
  // A'^{-1} = P - delta P U (I + delta V^T P U)^{-1} V^T P
  Eigen::Matrix2d small;
  small << 1.0 + delta * pij, delta * pjj,
           delta * pii, 1.0 + delta * pij;
  const Eigen::Matrix2d core = small.inverse() * delta;
  Eigen::Matrix<double, Eigen::Dynamic, 2> pu(inverse_.rows(), 2);
  pu.col(0) = inverse_.col(ii);
  pu.col(1) = inverse_.col(jj);
  Eigen::Matrix<double, 2, Eigen::Dynamic> vp(2, inverse_.cols());
  vp.row(0) = inverse_.row(jj);
  vp.row(1) = inverse_.row(ii);
  inverse_.noalias() -= pu * core * vp;
}

SignalPosterior update_signal(const StackedObservations& obs, const SamplingOperator& op,
                              const PrecisionAssembly& precision, double alpha_mean) {
  obs.check(op);
  const std::size_t n = op.n_vertices();
  const std::size_t k = op.n_snapshots();
  if (precision.n_snapshots() != k || static_cast<std::size_t>(precision.block().rows()) != n)
    fail(ErrorCode::DimensionMismatch, "update_signal: precision does not match the operator");
  if (!(alpha_mean > 0.0)) fail(ErrorCode::InvalidArgument, "update_signal: alpha must be > 0");

  SignalPosterior post;
  post.n = n;
  post.k = k;
  post.mu = Vector::Zero(idx(n * k));
  post.blocks.resize(k);

  // Snapshots sharing a selection share their covariance block.
  std::map<std::vector<std::size_t>, std::size_t> first_with;
  for (std::size_t s = 0; s < k; ++s) {
    const auto& sel = op.selection(s);
    auto it = first_with.find(sel);
    if (it != first_with.end()) {
      post.blocks[s] = post.blocks[it->second];
    } else {
      Matrix q = precision.block();
      for (std::size_t v : sel) q(idx(v), idx(v)) += alpha_mean;
      Eigen::LLT<Matrix> llt(q);
      if (llt.info() != Eigen::Success)
        fail(ErrorCode::NotPositiveDefinite,
             "update_signal: <B> + <alpha> Psi^T Psi is not positive definite");
      Matrix sigma = llt.solve(Matrix::Identity(idx(n), idx(n)));
      post.blocks[s] = 0.5 * (sigma + sigma.transpose());
      first_with.emplace(sel, s);
    }
    Vector rhs = Vector::Zero(idx(n));
    const auto y = obs.snapshot(s);
    for (std::size_t m = 0; m < sel.size(); ++m) rhs(idx(sel[m])) = alpha_mean * y[m];
    post.mu.segment(idx(s * n), idx(n)).noalias() = post.blocks[s] * rhs;
  }
  return post;
}

NoisePosterior update_noise(const StackedObservations& obs, const SamplingOperator& op,
                            const SignalPosterior& post, const VBConfig& cfg) {
  obs.check(op);
  const Vector residual = obs.y - op.apply(post.mu);
  double trace = 0.0;
  for (std::size_t s = 0; s < op.n_snapshots(); ++s)
    for (std::size_t v : op.selection(s)) trace += post.blocks[s](idx(v), idx(v));
  NoisePosterior out;
  const std::size_t count = cfg.noise_shape == NoiseShapeCount::StackedSignal
                                ? op.n_vertices() * op.n_snapshots()
                                : op.total();
  out.shape = cfg.rho_e + static_cast<double>(count) / 2.0;
  out.rate = cfg.xi_e + 0.5 * residual.squaredNorm() + 0.5 * trace;
  return out;
}

namespace {

EdgeUpdate finish_edge_update(std::size_t i, std::size_t j, VBState& state, const VBConfig& cfg,
                              EdgeQuadratic quadratic) {
  const SignalPosterior& sig = state.signal;
  EdgeUpdate out;
  out.quadratic = quadratic;
  for (std::size_t s = 0; s < sig.k; ++s)
    out.second_moment += sig.mean(s, i) * sig.mean(s, j) + sig.cov(s, i, j);

  double& lambda = state.lambda(idx(i), idx(j));
  if (out.quadratic.has_center && out.quadratic.u != 0.0) {
    const double candidate = out.second_moment / out.quadratic.u;
    if (candidate > 0.0 && std::isfinite(candidate)) {
      lambda = candidate;
      out.lambda_substituted = true;
    }
  }
  state.lambda(idx(j), idx(i)) = lambda;
  out.quadratic.lambda = lambda;

  const EdgeQuadratic& q = out.quadratic;
  const int k = static_cast<int>(sig.k);
  out.tag = classify_edge_posterior(q.c, q.d, q.g, lambda, k).tag;
  try {
    out.ell = -edge_posterior_mean(q.c, q.d, q.g, lambda, k, cfg.series);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::QuadratureFailure) throw;
    out.skipped = true;
    out.ell = state.laplacian(idx(i), idx(j));
  }
  state.laplacian(idx(i), idx(j)) = state.laplacian(idx(j), idx(i)) = out.ell;
  return out;
}

}  // namespace

EdgeUpdate update_edge(std::size_t i, std::size_t j, VBState& state, const VBConfig& cfg,
                       const Matrix* source) {
  const Matrix& from = source ? *source : state.laplacian;
  if (i == j || i >= state.signal.n || j >= state.signal.n)
    fail(ErrorCode::InvalidArgument, "update_edge: need distinct vertices");
  return finish_edge_update(i, j, state, cfg, extract_edge_quadratic(from, cfg.epsilon, i, j));
}

std::size_t sweep_edges(VBState& state, const VBConfig& cfg,
                        const std::optional<Eigen::MatrixX<bool>>& support,
                        const EdgeObserver& observer) {
  const std::size_t n = state.signal.n;
  std::size_t skipped = 0;
  auto allowed = [&](std::size_t i, std::size_t j) {
    return !support || (*support)(idx(i), idx(j));
  };

  if (cfg.sweep == SweepMode::Jacobi) {
    const Matrix previous = state.laplacian;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!allowed(i, j)) continue;
        const EdgeUpdate up = update_edge(i, j, state, cfg, &previous);
        if (up.skipped) ++skipped;
        if (observer) observer(i, j, up);
      }
  } else {
    std::optional<EdgeDeterminantTracker> tracker;
    if (cfg.incremental_determinants) tracker.emplace(state.laplacian, cfg.epsilon);
    for (std::size_t i = 0; i < n; ++i) {
      if (tracker && i > 0) tracker->refresh();
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!allowed(i, j)) continue;
        EdgeUpdate up;
        if (tracker && tracker->usable()) {
          up = finish_edge_update(i, j, state, cfg, tracker->quadratic(i, j));
          tracker->set(i, j, up.ell);
        } else {
          up = update_edge(i, j, state, cfg);
          if (tracker) tracker->set_unchecked(i, j, up.ell);
        }
        if (up.skipped) ++skipped;
        if (observer) observer(i, j, up);
      }
    }
  }
  refresh_diagonal(state.laplacian);
  return skipped;
}

LaplacianEstimate VBState::laplacian_estimate() const { return LaplacianEstimate(laplacian); }

VBState run_vb(const StackedObservations& obs, const SamplingOperator& op, const VBConfig& cfg,
               const RunOptions& options) {
  cfg.validate();
  obs.check(op);
  const std::size_t n = op.n_vertices();
  const std::size_t k = op.n_snapshots();
  if (options.truth && (static_cast<std::size_t>(options.truth->rows()) != k ||
                        static_cast<std::size_t>(options.truth->cols()) != n))
    fail(ErrorCode::DimensionMismatch, "run_vb: truth must be K x N");
  if (options.edge_support && (static_cast<std::size_t>(options.edge_support->rows()) != n ||
                               static_cast<std::size_t>(options.edge_support->cols()) != n))
    fail(ErrorCode::DimensionMismatch, "run_vb: edge support must be N x N");

  VBState state;
  state.sweep = cfg.sweep;
  state.signal.n = n;
  state.signal.k = k;
  state.signal.mu = op.adjoint(obs.y);
  state.signal.blocks.assign(k, Matrix::Zero(idx(n), idx(n)));
  if (options.initial_laplacian) {
    if (options.initial_laplacian->n() != n)
      fail(ErrorCode::DimensionMismatch, "run_vb: initial Laplacian must be N x N");
    state.laplacian = options.initial_laplacian->values();
  } else {
    state.laplacian = Matrix::Zero(idx(n), idx(n));
  }
  state.lambda = Matrix::Constant(idx(n), idx(n), cfg.lambda_init);
  state.noise = {cfg.rho_e, cfg.xi_e};
  state.alpha_mean = cfg.fixed_alpha.value_or(state.noise.mean_precision());

  auto edges = [&]() -> std::size_t {
    return cfg.update_edges ? sweep_edges(state, cfg, options.edge_support, options.on_edge_update) : 0;
  };
  auto noise = [&] {
    if (cfg.fixed_alpha) return;
    if (cfg.defer_first_noise_update && state.iteration == 1 &&
        cfg.order == UpdateOrder::EdgesNoiseSignal)
      return;
    state.noise = update_noise(obs, op, state.signal, cfg);
    state.alpha_mean = state.noise.mean_precision();
  };
  auto signal = [&] {
    try {
      const PrecisionAssembly b = assemble_precision(state.laplacian, cfg.epsilon, k);
      state.signal = update_signal(obs, op, b, state.alpha_mean);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotPositiveDefinite) throw;
      std::ostringstream msg;
      msg << e.what() << " (iteration " << state.iteration << ")";
      fail(ErrorCode::NotPositiveDefinite, msg.str());
    }
  };

  for (int it = 1; it <= cfg.max_iters; ++it) {
    state.iteration = it;
    const Vector previous = state.signal.mu;
    std::size_t skipped = 0;
    if (cfg.order == UpdateOrder::EdgesNoiseSignal) {
      skipped = edges();
      noise();
      signal();
    } else {
      signal();
      noise();
      skipped = edges();
    }

    IterationDiagnostics diag;
    diag.iteration = it;
    const double base = previous.norm();
    diag.relative_change = (state.signal.mu - previous).norm() / (base > 0.0 ? base : 1.0);
    diag.alpha_mean = state.alpha_mean;
    diag.edges_skipped = skipped;
    if (options.truth) diag.nmse = nmse_signal(state.signal.mean_matrix(), *options.truth);
    state.trace.push_back(diag);
    if (diag.relative_change < cfg.rel_tol) {
      state.converged = true;
      break;
    }
  }
  return state;
}

}  // namespace gsvb
