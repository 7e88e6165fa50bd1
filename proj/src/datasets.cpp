#include "gsvb/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "gsvb/error.hpp"

namespace gsvb {
namespace {

using Index = Eigen::Index;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell.push_back(ch);
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

}  // namespace

Matrix KroneckerSpec::default_seed_matrix() {
  Matrix p0(3, 3);
  p0 << 0.6, 0.1, 0.7,
        0.3, 0.1, 0.5,
        0.0, 1.0, 0.1;
  return p0;
}

Matrix kronecker_probability_matrix(const KroneckerSpec& spec) {
  if (spec.kron_order < 1) fail(ErrorCode::InvalidParams, "kronecker: kron_order must be >= 1");
  const Matrix& seed = spec.seed_matrix;
  if (seed.rows() != seed.cols() || seed.rows() == 0)
    fail(ErrorCode::InvalidParams, "kronecker: seed matrix must be square");
  if ((seed.array() < 0.0).any() || (seed.array() > 1.0).any())
    fail(ErrorCode::InvalidParams, "kronecker: seed entries must lie in [0, 1]");
  double vertices = 1.0;
  for (int level = 0; level < spec.kron_order; ++level) vertices *= static_cast<double>(seed.rows());
  if (vertices > static_cast<double>(kMaxKroneckerVertices))
    fail(ErrorCode::InvalidParams, "kronecker: " + std::to_string(static_cast<long long>(vertices)) +
                                       " vertices exceeds the dense limit of " +
                                       std::to_string(kMaxKroneckerVertices));

  Matrix out = seed;
  for (int level = 1; level < spec.kron_order; ++level) {
    Matrix next(out.rows() * seed.rows(), out.cols() * seed.cols());
    for (Index i = 0; i < out.rows(); ++i)
      for (Index j = 0; j < out.cols(); ++j)
        next.block(i * seed.rows(), j * seed.cols(), seed.rows(), seed.cols()) = out(i, j) * seed;
    out = std::move(next);
  }
  return out;
}

WeightedGraph sample_adjacency(const Matrix& probabilities, std::uint64_t rng_seed) {
  if (probabilities.rows() != probabilities.cols())
    fail(ErrorCode::InvalidParams, "sample_adjacency: probability matrix must be square");
  if ((probabilities.array() < 0.0).any() || (probabilities.array() > 1.0).any())
    fail(ErrorCode::InvalidParams, "sample_adjacency: probabilities must lie in [0, 1]");
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index n = probabilities.rows();
  Matrix draw = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) draw(i, j) = unit(rng) < probabilities(i, j) ? 1.0 : 0.0;
  Matrix w = draw.cwiseMax(draw.transpose());
  w.diagonal().setZero();
  return WeightedGraph(std::move(w));
}

BandlimitedSignals generate_bandlimited_signals(const LaplacianEstimate& laplacian,
                                                const BandlimitedSpec& spec) {
  const Index n = static_cast<Index>(laplacian.n());
  if (spec.omega < 1 || spec.omega > n)
    fail(ErrorCode::InvalidParams, "bandlimited: omega must lie in [1, N]");
  if (spec.k < 1) fail(ErrorCode::InvalidParams, "bandlimited: K must be >= 1");

  Eigen::SelfAdjointEigenSolver<Matrix> eig(laplacian.values());
  if (eig.info() != Eigen::Success)
    fail(ErrorCode::EigenFailure, "bandlimited: eigendecomposition failed");

  BandlimitedSignals out;
  out.basis = eig.eigenvectors().leftCols(spec.omega);
  std::mt19937_64 rng(spec.rng_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix gamma(spec.k, spec.omega);
  for (Index k = 0; k < spec.k; ++k)
    for (Index i = 0; i < spec.omega; ++i) gamma(k, i) = normal(rng);
  out.clean = gamma * out.basis.transpose();

  const double power = out.clean.squaredNorm() / static_cast<double>(out.clean.size());
  out.noise_variance = power / std::pow(10.0, spec.snr_db / 10.0);
  const double sd = std::sqrt(out.noise_variance);
  out.noisy = out.clean;
  for (Index k = 0; k < spec.k; ++k)
    for (Index i = 0; i < n; ++i) out.noisy(k, i) += sd * normal(rng);
  return out;
}

WeightedGraph harary_graph(int n, int connectivity) {
  if (connectivity < 2 || connectivity >= n)
    fail(ErrorCode::InvalidParams, "harary_graph: need 2 <= connectivity < n");
  Matrix w = Matrix::Zero(n, n);
  auto link = [&](int a, int b) {
    a = ((a % n) + n) % n;
    b = ((b % n) + n) % n;
    if (a != b) w(a, b) = w(b, a) = 1.0;
  };
  const int reach = connectivity / 2;
  for (int i = 0; i < n; ++i)
    for (int step = 1; step <= reach; ++step) link(i, i + step);
  if (connectivity % 2 == 1) {
    if (n % 2 == 0) {
      for (int i = 0; i < n / 2; ++i) link(i, i + n / 2);
    } else {
      for (int i = 0; i <= (n - 1) / 2; ++i) link(i, i + (n + 1) / 2);
    }
  }
  return WeightedGraph(std::move(w));
}

SensorDataset load_sensor_csv(const std::filesystem::path& path, std::size_t expected_sensors,
                              std::size_t max_snapshots) {
  if (expected_sensors == 0 || max_snapshots == 0)
    fail(ErrorCode::InvalidArgument, "load_sensor_csv: sensors and snapshots must be positive");
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "load_sensor_csv: cannot open " + path.string());

  SensorDataset out;
  out.n_sensors = expected_sensors;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() > expected_sensors)
      fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line_no) + ": " +
                                      std::to_string(cells.size()) + " columns, expected " +
                                      std::to_string(expected_sensors));

    std::vector<double> values(expected_sensors, 0.0);
    std::size_t bad_column = 0;  // 1-based; 0 = row is clean
    std::size_t numeric = 0;
    for (std::size_t c = 0; c < expected_sensors; ++c) {
      if (c < cells.size() && parse_number(cells[c], values[c])) {
        ++numeric;
      } else if (bad_column == 0) {
        bad_column = c + 1;
      }
    }
    if (!seen_content && numeric == 0 && cells.size() == expected_sensors) {
      seen_content = true;  // header line
      continue;
    }
    seen_content = true;
    if (bad_column != 0) {
      std::string msg = path.string() + ":" + std::to_string(line_no) + ": dropped row (column " +
                        std::to_string(bad_column) + " missing or non-numeric)";
      spdlog::warn("{}", msg);
      out.warnings.push_back(std::move(msg));
      continue;
    }
    if (rows.size() < max_snapshots) rows.push_back(std::move(values));
  }
  if (rows.empty())
    fail(ErrorCode::TooFewSnapshots, "load_sensor_csv: no complete snapshots in " + path.string());

  out.snapshots.resize(static_cast<Index>(rows.size()), static_cast<Index>(expected_sensors));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t c = 0; c < expected_sensors; ++c)
      out.snapshots(static_cast<Index>(k), static_cast<Index>(c)) = rows[k][c];
  return out;
}

SamplingOperator random_sampling_operator(std::size_t n, std::size_t k, std::size_t m,
                                          std::uint64_t rng_seed) {
  if (m < 1 || m > n) fail(ErrorCode::InvalidParams, "sampling: need 1 <= M <= N");
  if (k < 1) fail(ErrorCode::InvalidParams, "sampling: K must be >= 1");
  std::vector<std::size_t> vertices(n);
  std::iota(vertices.begin(), vertices.end(), 0);
  std::mt19937_64 rng(rng_seed);
  std::shuffle(vertices.begin(), vertices.end(), rng);
  vertices.resize(m);
  std::sort(vertices.begin(), vertices.end());
  return SamplingOperator(n, std::vector<std::vector<std::size_t>>(k, vertices));
}

}  // namespace gsvb
