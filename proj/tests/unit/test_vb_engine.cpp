#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "gsvb/datasets.hpp"
#include "gsvb/error.hpp"
#include "gsvb/metrics.hpp"
#include "gsvb/vb_engine.hpp"

using namespace gsvb;

namespace {

double det_with_slot(Matrix a, std::size_t i, std::size_t j, double ell, double eps) {
  const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
  a(ii, jj) = a(jj, ii) = ell;
  a.diagonal().array() += eps;
  return a.determinant();
}

VBState small_state(const Matrix& laplacian, const Vector& mu, std::size_t k, double lambda0) {
  VBState s;
  s.signal.n = static_cast<std::size_t>(laplacian.rows());
  s.signal.k = k;
  s.signal.mu = mu;
  s.signal.blocks.assign(k, Matrix::Zero(laplacian.rows(), laplacian.rows()));
  s.laplacian = laplacian;
  s.lambda = Matrix::Constant(laplacian.rows(), laplacian.rows(), lambda0);
  return s;
}

std::vector<std::vector<std::size_t>> random_selections(std::size_t n, std::size_t k,
                                                        std::mt19937_64& rng) {
  std::vector<std::vector<std::size_t>> sel(k);
  for (auto& s : sel)
    for (std::size_t v = 0; v < n; ++v)
      if (rng() % 3 != 0) s.push_back(v);
  return sel;
}

}  // namespace

TEST_CASE("edge quadratic of a 2 x 2 matrix") {
  // diagonal (with eps) fixed at 2 and 3: det = 6 - l^2
  Matrix l(2, 2);
  l << 1.99, 0.0, 0.0, 2.99;
  const EdgeQuadratic q = extract_edge_quadratic(l, 0.01, 0, 1);
  CHECK(q.c == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(q.d) <= 1e-12);
  CHECK(q.g == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(q.has_center);
  CHECK(q.z == doctest::Approx(-6.0).epsilon(1e-12));
}

TEST_CASE("edge quadratic reproduces the determinant") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ell(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 12);
    const Matrix l = oracle::random_laplacian(n, rng);
    const std::size_t i = rng() % n;
    std::size_t j = rng() % n;
    if (j == i) j = (i + 1) % n;
    const EdgeQuadratic q = extract_edge_quadratic(l, 0.01, i, j);
    for (int p = 0; p < 5; ++p) {
      const double x = ell(rng);
      const double direct = det_with_slot(l, i, j, x, 0.01);
      CHECK(std::abs(q.det(x) - direct) <= 1e-9 * std::max(1.0, std::abs(direct)));
    }
    if (q.has_center) {
      CHECK(q.u == doctest::Approx(q.d / (2 * q.c)).epsilon(1e-14));
      CHECK(q.z == doctest::Approx(q.g / q.c - q.d * q.d / (4 * q.c * q.c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("zeroed-slot determinant of a diagonally dominant Laplacian is positive") {
  std::mt19937_64 rng(5);
  const Matrix l = oracle::random_laplacian(6, rng);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j) {
      const EdgeQuadratic q = extract_edge_quadratic(l, 0.01, i, j);
      Matrix zeroed = l + 0.01 * Matrix::Identity(6, 6);
      zeroed(i, j) = zeroed(j, i) = 0.0;
      CHECK(Eigen::LLT<Matrix>(zeroed).info() == Eigen::Success);
      CHECK(q.g > 0.0);
      CHECK(q.g == doctest::Approx(zeroed.determinant()).epsilon(1e-10));
    }
}

TEST_CASE("incremental determinant tracker matches the direct path") {
  std::mt19937_64 rng(44);
  const int n = 12;
  Matrix l = oracle::random_laplacian(n, rng);
  EdgeDeterminantTracker tracker(l, 0.01);
  REQUIRE(tracker.usable());
  std::uniform_real_distribution<double> value(-1.0, 0.2);
  for (int step = 0; step < 30; ++step) {
    const std::size_t i = rng() % n;
    std::size_t j = rng() % n;
    if (j == i) j = (i + 1) % n;
    const EdgeQuadratic a = tracker.quadratic(i, j);
    const EdgeQuadratic b = extract_edge_quadratic(l, 0.01, i, j);
    const double scale = std::max({std::abs(b.c), std::abs(b.d), std::abs(b.g)});
    CHECK(std::abs(a.c * std::exp(a.log_scale) - b.c * std::exp(b.log_scale)) <= 1e-9 * scale);
    CHECK(std::abs(a.d * std::exp(a.log_scale) - b.d * std::exp(b.log_scale)) <= 1e-9 * scale);
    CHECK(std::abs(a.g * std::exp(a.log_scale) - b.g * std::exp(b.log_scale)) <= 1e-9 * scale);
    const double v = value(rng);
    tracker.set(i, j, v);
    l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    l(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
  }
}

TEST_CASE("signal update equals the dense conjugate posterior") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 4, k = 2;
    const Matrix l = oracle::random_laplacian(static_cast<int>(n), rng);
    const SamplingOperator op(n, random_selections(n, k, rng));
    Vector y(static_cast<Eigen::Index>(op.total()));
    for (auto& v : y) v = nd(rng);
    StackedObservations obs{y, op.offsets()};
    const double alpha = 0.5 + trial;
    const SignalPosterior post =
        update_signal(obs, op, assemble_precision(l, 0.01, k), alpha);

    std::vector<std::vector<std::size_t>> sel;
    for (std::size_t b = 0; b < k; ++b) sel.push_back(op.selection(b));
    const oracle::DensePosterior ref = oracle::dense_posterior(l, 0.01, alpha, sel, y);
    CHECK((post.mu - ref.mu).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, ref.mu.norm()));
    const Matrix dense = post.dense_covariance();
    CHECK((dense - ref.sigma).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, ref.sigma.norm()));
    for (const Matrix& block : post.blocks) {
      CHECK(block == block.transpose());
      CHECK(Eigen::LLT<Matrix>(block).info() == Eigen::Success);
    }
  }
}

TEST_CASE("signal update scalar and empty cases") {
  const SamplingOperator op(1, {{0}});
  StackedObservations obs{Vector::Constant(1, 2.0), op.offsets()};
  const Matrix zero = Matrix::Zero(1, 1);
  // <B> = eps = b
  const double b = 0.25, a = 3.0;
  const SignalPosterior post = update_signal(obs, op, assemble_precision(zero, b, 1), a);
  CHECK(post.blocks[0](0, 0) == doctest::Approx(1.0 / (a + b)).epsilon(1e-15));
  CHECK(post.mu(0) == doctest::Approx(a * 2.0 / (a + b)).epsilon(1e-15));

  std::mt19937_64 rng(1);
  const Matrix l = oracle::random_laplacian(3, rng);
  const SamplingOperator none(3, {{}, {}});
  StackedObservations empty{Vector(0), none.offsets()};
  const SignalPosterior prior = update_signal(empty, none, assemble_precision(l, 0.01, 2), 1.0);
  CHECK(prior.mu.isZero());
  const Matrix inv = (l + 0.01 * Matrix::Identity(3, 3)).inverse();
  CHECK((prior.blocks[1] - inv).cwiseAbs().maxCoeff() <= 1e-10 * inv.norm());
}

TEST_CASE("noise update shape and rate") {
  VBConfig cfg;
  const SamplingOperator op = random_sampling_operator(81, 20, 81, 1);
  StackedObservations obs{Vector::Zero(81 * 20), op.offsets()};
  SignalPosterior post;
  post.n = 81;
  post.k = 20;
  post.mu = Vector::Zero(81 * 20);
  post.blocks.assign(20, Matrix::Zero(81, 81));
  NoisePosterior q = update_noise(obs, op, post, cfg);
  CHECK(q.shape == doctest::Approx(810.000001).epsilon(1e-15));
  CHECK(q.rate == cfg.xi_e);  // y = Psi mu and Sigma = 0
  cfg.noise_shape = NoiseShapeCount::StackedSignal;
  CHECK(update_noise(obs, op, post, cfg).shape == doctest::Approx(810.000001).epsilon(1e-15));

  // under partial sampling the two counts differ
  const SamplingOperator half = random_sampling_operator(81, 20, 40, 1);
  StackedObservations obs_half{Vector::Zero(40 * 20), half.offsets()};
  CHECK(update_noise(obs_half, half, post, cfg).shape == doctest::Approx(810.000001));
  cfg.noise_shape = NoiseShapeCount::Observed;
  CHECK(update_noise(obs_half, half, post, cfg).shape == doctest::Approx(400.000001));
}

TEST_CASE("noise rate matches a Monte Carlo expectation") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  const std::size_t n = 4, k = 2;
  const Matrix l = oracle::random_laplacian(static_cast<int>(n), rng);
  const SamplingOperator op(n, random_selections(n, k, rng));
  Vector y(static_cast<Eigen::Index>(op.total()));
  for (auto& v : y) v = 2.0 * nd(rng);
  StackedObservations obs{y, op.offsets()};
  const SignalPosterior post = update_signal(obs, op, assemble_precision(l, 0.05, k), 1.5);
  VBConfig cfg;
  const NoisePosterior q = update_noise(obs, op, post, cfg);

  std::vector<Matrix> chol;
  for (const Matrix& b : post.blocks) chol.push_back(Eigen::LLT<Matrix>(b).matrixL());
  constexpr int kDraws = 1'000'000;
  double acc = 0.0;
  Vector x(static_cast<Eigen::Index>(n * k)), z(static_cast<Eigen::Index>(n));
  for (int d = 0; d < kDraws; ++d) {
    for (std::size_t b = 0; b < k; ++b) {
      for (auto& v : z) v = nd(rng);
      const auto off = static_cast<Eigen::Index>(b * n);
      x.segment(off, static_cast<Eigen::Index>(n)) =
          post.mu.segment(off, static_cast<Eigen::Index>(n)) + chol[b] * z;
    }
    acc += (y - op.apply(x)).squaredNorm();
  }
  const double expected = cfg.xi_e + 0.5 * acc / kDraws;
  CHECK(q.rate == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("lambda substitution uses S / u") {
  // A = L + eps I with A_02 = 1, A_12 = -2, A_22 = 1 gives u = 2 for the pair (0, 1)
  Matrix l(3, 3);
  l << 1.0, 0.0, 1.0, 0.0, 2.0, -2.0, 1.0, -2.0, 0.99;
  Vector mu(3);
  mu << 1.0, 1.0, 0.0;
  VBState state = small_state(l, mu, 1, 0.01);
  VBConfig cfg;
  const EdgeUpdate up = update_edge(0, 1, state, cfg);
  CHECK(up.quadratic.u == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(up.second_moment == 1.0);
  CHECK(up.lambda_substituted);
  CHECK(state.lambda(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(state.lambda(1, 0) == state.lambda(0, 1));
  CHECK(state.laplacian(0, 1) == up.ell);
  CHECK(state.laplacian(1, 0) == up.ell);

  // a negative ratio keeps the previous precision
  Vector opposite(3);
  opposite << 1.0, -1.0, 0.0;
  VBState kept = small_state(l, opposite, 1, 0.03);
  const EdgeUpdate up2 = update_edge(0, 1, kept, cfg);
  CHECK_FALSE(up2.lambda_substituted);
  CHECK(kept.lambda(0, 1) == 0.03);
}

TEST_CASE("edge update mean equals the posterior quadrature on random instances") {
  std::mt19937_64 rng(90);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 5;
    const Matrix l = oracle::random_laplacian(n, rng);
    const std::size_t k = 3;
    Vector mu(n * k);
    for (auto& v : mu) v = nd(rng);
    VBState state = small_state(l, mu, k, 0.01);
    const std::size_t i = rng() % n, j = (i + 1 + rng() % (n - 1)) % n;
    VBConfig cfg;
    const EdgeUpdate up = update_edge(std::min(i, j), std::max(i, j), state, cfg);
    if (up.skipped || up.tag == EdgePosteriorCase::DegenerateZero) continue;
    const EdgeQuadratic& q = up.quadratic;
    const double expected = oracle::edge_mean(q.c, q.d, q.g, q.lambda, static_cast<int>(k));
    CHECK(-up.ell == doctest::Approx(expected).epsilon(1e-5));
  }
}

TEST_CASE("sweep keeps the Laplacian invariants") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (SweepMode mode : {SweepMode::GaussSeidel, SweepMode::Jacobi}) {
    const int n = 8;
    const std::size_t k = 4;
    Vector mu(n * k);
    for (auto& v : mu) v = nd(rng);
    VBState state = small_state(oracle::random_laplacian(n, rng), mu, k, 0.01);
    VBConfig cfg;
    cfg.sweep = mode;
    sweep_edges(state, cfg);
    CHECK(state.laplacian == state.laplacian.transpose());
    CHECK((state.laplacian * Vector::Ones(n)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(state.lambda == state.lambda.transpose());
  }
}

TEST_CASE("Jacobi sweep reads the previous matrix for every edge") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  const int n = 6;
  const std::size_t k = 3;
  Vector mu(n * k);
  for (auto& v : mu) v = nd(rng);
  const Matrix start = oracle::random_laplacian(n, rng);
  VBConfig cfg;
  cfg.sweep = SweepMode::Jacobi;

  VBState swept = small_state(start, mu, k, 0.01);
  sweep_edges(swept, cfg);

  VBState manual = small_state(start, mu, k, 0.01);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) update_edge(i, j, manual, cfg, &start);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) CHECK(swept.laplacian(i, j) == manual.laplacian(i, j));
}

TEST_CASE("Gauss-Seidel sweep agrees with and without the incremental tracker") {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> nd;
  const int n = 10;
  const std::size_t k = 5;
  Vector mu(n * k);
  for (auto& v : mu) v = nd(rng);
  const Matrix start = oracle::random_laplacian(n, rng);
  VBConfig fast, slow;
  slow.incremental_determinants = false;
  VBState a = small_state(start, mu, k, 0.01), b = small_state(start, mu, k, 0.01);
  sweep_edges(a, fast);
  sweep_edges(b, slow);
  CHECK((a.laplacian - b.laplacian).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("zero noise with a fixed Laplacian drives mu to the data") {
  KroneckerSpec ks;
  ks.kron_order = 2;
  const LaplacianEstimate l =
      laplacian_from_weights(sample_adjacency(kronecker_probability_matrix(ks), 2));
  BandlimitedSpec bs;
  bs.omega = 4;
  bs.k = 3;
  bs.rng_seed = 2;
  const BandlimitedSignals sig = generate_bandlimited_signals(l, bs);
  const SamplingOperator op = random_sampling_operator(9, 3, 9, 1);
  const StackedObservations obs = StackedObservations::sample(op, sig.clean);
  VBConfig cfg;
  cfg.update_edges = false;
  cfg.max_iters = 30;
  cfg.rel_tol = 1e-300;
  RunOptions opts;
  opts.initial_laplacian = l;
  opts.truth = sig.clean;
  const VBState state = run_vb(obs, op, cfg, opts);
  REQUIRE(state.trace.size() == 30);
  for (std::size_t t = 2; t < state.trace.size(); ++t) {
    CHECK(state.trace[t].alpha_mean > state.trace[t - 1].alpha_mean);
    CHECK(state.trace[t].nmse < state.trace[t - 1].nmse);
  }
  CHECK(state.trace.back().nmse < 1e-2 * state.trace.front().nmse);
}

TEST_CASE("update order variant runs and keeps invariants") {
  KroneckerSpec ks;
  ks.kron_order = 2;
  const LaplacianEstimate l =
      laplacian_from_weights(sample_adjacency(kronecker_probability_matrix(ks), 5));
  BandlimitedSpec bs;
  bs.omega = 3;
  bs.k = 4;
  bs.rng_seed = 5;
  const BandlimitedSignals sig = generate_bandlimited_signals(l, bs);
  const SamplingOperator op = random_sampling_operator(9, 4, 6, 5);
  const StackedObservations obs = StackedObservations::sample(op, sig.noisy);
  VBConfig cfg;
  cfg.max_iters = 5;
  cfg.order = UpdateOrder::SignalNoiseEdges;
  const VBState state = run_vb(obs, op, cfg);
  CHECK(state.iteration == 5);
  CHECK((state.laplacian * Vector::Ones(9)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("run_vb validates its inputs") {
  const SamplingOperator op = random_sampling_operator(4, 2, 4, 1);
  const StackedObservations obs{Vector::Zero(8), op.offsets()};
  VBConfig bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(run_vb(obs, op, bad), Error);
  RunOptions opts;
  opts.truth = Matrix::Ones(3, 4);
  try {
    run_vb(obs, op, VBConfig{}, opts);
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("noise variance of a small instance is recovered within a factor of two") {
  // 6-ring, three-component bandlimited signals, K = 3, full sampling at
  // 6 dB. Same 4-in-5 rule as the end-to-end noise check.
  const LaplacianEstimate l = laplacian_from_weights(harary_graph(6, 2));
  int within = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    BandlimitedSpec bs;
    bs.omega = 3;
    bs.k = 3;
    bs.snr_db = 6.0;
    bs.rng_seed = seed;
    const BandlimitedSignals sig = generate_bandlimited_signals(l, bs);
    const SamplingOperator op = random_sampling_operator(6, 3, 6, seed);
    const VBState state = run_vb(StackedObservations::sample(op, sig.noisy), op, VBConfig{});
    const double ratio = state.noise.variance_estimate() / sig.noise_variance;
    if (ratio >= 0.5 && ratio <= 2.0) ++within;
  }
  MESSAGE("seeds within x2: " << within << " of 20");
  CHECK(within >= 16);
}
