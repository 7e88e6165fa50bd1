#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace gsvb {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Undirected weighted graph: symmetric weights with a zero diagonal.
class WeightedGraph {
 public:
  /// Throws InvalidArgument if w is not square, not symmetric or has a
  /// nonzero diagonal.
  explicit WeightedGraph(Matrix weights);

  std::size_t n_vertices() const { return static_cast<std::size_t>(weights_.rows()); }
  const Matrix& weights() const { return weights_; }
  std::size_t edge_count() const;

 private:
  Matrix weights_;
};

/// Symmetric matrix whose rows sum to zero.
class LaplacianEstimate {
 public:
  LaplacianEstimate() = default;
  /// Validates symmetry and zero row sums to within `tol` (scaled by the
  /// largest entry).
  explicit LaplacianEstimate(Matrix values, double tol = 1e-10);

  /// Builds from off-diagonal entries only; each diagonal entry becomes
  /// minus the compensated sum of the off-diagonals in its row.
  static LaplacianEstimate from_off_diagonal(const Matrix& values);

  std::size_t n() const { return static_cast<std::size_t>(values_.rows()); }
  const Matrix& values() const { return values_; }
  double operator()(std::size_t i, std::size_t j) const {
    return values_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

 private:
  Matrix values_;
};

LaplacianEstimate laplacian_from_weights(const WeightedGraph& g);

/// Per-snapshot vertex selections. Represents the block-diagonal 0/1 matrix
/// Psi = diag(A_1, ..., A_K) without materializing it.
class SamplingOperator {
 public:
  /// Each selection lists distinct vertex indices < n_vertices. Throws
  /// InvalidArgument otherwise.
  SamplingOperator(std::size_t n_vertices, std::vector<std::vector<std::size_t>> selections);

  std::size_t n_vertices() const { return n_; }
  std::size_t n_snapshots() const { return selections_.size(); }
  std::size_t total() const { return offsets_.back(); }
  const std::vector<std::size_t>& selection(std::size_t k) const { return selections_[k]; }
  /// Start of snapshot k inside the stacked observation vector; size K + 1.
  const std::vector<std::size_t>& offsets() const { return offsets_; }

  /// y = Psi x, x stacked snapshot-major (length N K).
  Vector apply(const Vector& x) const;
  /// x = Psi^T y (scatter with zero fill).
  Vector adjoint(const Vector& y) const;
  /// Diagonal of A_k^T A_k as a 0/1 vector of length N.
  Vector mask(std::size_t k) const;

 private:
  std::size_t n_;
  std::vector<std::vector<std::size_t>> selections_;
  std::vector<std::size_t> offsets_;
};

/// Stacked observation vector y = [y_1; ...; y_K].
struct StackedObservations {
  Vector y;
  std::vector<std::size_t> offsets;  // K + 1 entries, offsets.back() == y.size()

  /// Gathers noisy snapshots (K x N, row k = snapshot k) through op.
  static StackedObservations sample(const SamplingOperator& op, const Matrix& snapshots);
  /// Throws DimensionMismatch unless y and offsets agree with op.
  void check(const SamplingOperator& op) const;
  std::span<const double> snapshot(std::size_t k) const;
};

/// B = I_K ⊗ (L + eps I), stored as the single N x N block.
class PrecisionAssembly {
 public:
  PrecisionAssembly(Matrix block, double epsilon, std::size_t n_snapshots);

  const Matrix& block() const { return block_; }
  double epsilon() const { return epsilon_; }
  std::size_t n_snapshots() const { return k_; }
  std::size_t dim() const { return static_cast<std::size_t>(block_.rows()) * k_; }

  /// B x, one block at a time.
  Vector apply(const Vector& x) const;
  Matrix dense() const;

 private:
  Matrix block_;
  double epsilon_;
  std::size_t k_;
};

/// Throws InvalidArgument for epsilon <= 0 and NotPositiveDefinite if
/// L + eps I has no Cholesky factor.
PrecisionAssembly assemble_precision(const LaplacianEstimate& laplacian, double epsilon,
                                     std::size_t n_snapshots);
/// Same, for a working matrix that need not satisfy the Laplacian invariants.
PrecisionAssembly assemble_precision(const Matrix& laplacian, double epsilon,
                                     std::size_t n_snapshots);

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);

}  // namespace gsvb
