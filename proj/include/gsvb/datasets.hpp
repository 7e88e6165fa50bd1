#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gsvb/graph_model.hpp"

namespace gsvb {

struct KroneckerSpec {
  Matrix seed_matrix = default_seed_matrix();  // Bernoulli probabilities in [0, 1]
  int kron_order = 4;
  std::uint64_t rng_seed = 0;

  /// The 3 x 3 seed of the synthetic benchmark (N = 81 at order 4).
  static Matrix default_seed_matrix();
};

inline constexpr int kMaxKroneckerVertices = 4096;

/// kron_order-fold Kronecker power of the seed; N = rows(seed)^kron_order,
/// at most kMaxKroneckerVertices (everything downstream is dense).
Matrix kronecker_probability_matrix(const KroneckerSpec& spec);

/// W_ij ~ Bernoulli(P_ij) independently, then W | W^T with a zero diagonal.
WeightedGraph sample_adjacency(const Matrix& probabilities, std::uint64_t rng_seed);

struct BandlimitedSpec {
  int omega = 15;
  int k = 20;
  double snr_db = 6.0;
  std::uint64_t rng_seed = 0;
};

struct BandlimitedSignals {
  Matrix clean;  // K x N
  Matrix noisy;  // K x N
  double noise_variance = 0.0;
  Matrix basis;  // N x omega, eigenvectors of the omega smallest eigenvalues
};

/// Snapshots x_k = sum_{i < omega} gamma_ki r_i with gamma ~ N(0, 1) and
/// r_i the Laplacian eigenvectors in ascending eigenvalue order, plus white
/// noise whose variance puts the mean per-entry power snr_db above it.
BandlimitedSignals generate_bandlimited_signals(const LaplacianEstimate& laplacian,
                                                const BandlimitedSpec& spec);

/// Classical P-connected Harary graph on a ring of n vertices with unit
/// weights. Throws InvalidParams unless 2 <= connectivity < n.
WeightedGraph harary_graph(int n, int connectivity);

struct SensorDataset {
  std::size_t n_sensors = 0;
  Matrix snapshots;  // K x N
  int harary_connectivity = 0;
  std::vector<std::string> warnings;  // one per dropped row
};

/// Reads one column per sensor and one row per snapshot. An optional header
/// line of non-numeric cells is skipped. Rows with missing or non-numeric
/// cells are dropped with a warning; a row with too many cells is a
/// ParseError. Keeps at most max_snapshots rows. Throws IoError or
/// TooFewSnapshots (nothing left).
SensorDataset load_sensor_csv(const std::filesystem::path& path, std::size_t expected_sensors,
                              std::size_t max_snapshots);

/// M distinct vertices drawn uniformly once and reused for all K snapshots.
SamplingOperator random_sampling_operator(std::size_t n, std::size_t k, std::size_t m,
                                          std::uint64_t rng_seed);

}  // namespace gsvb
