#include "gsvb/graph_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gsvb/error.hpp"

namespace gsvb {
namespace {

using Index = Eigen::Index;

Index idx(std::size_t i) { return static_cast<Index>(i); }

double row_offdiag_sum(const Matrix& m, Index i) {
  std::vector<double> row;
  row.reserve(static_cast<std::size_t>(m.cols()));
  for (Index j = 0; j < m.cols(); ++j)
    if (j != i) row.push_back(m(i, j));
  return compensated_sum(row);
}

}  // namespace

double compensated_sum(std::span<const double> values) {
  double sum = 0.0, comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

WeightedGraph::WeightedGraph(Matrix weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols())
    fail(ErrorCode::InvalidArgument, "WeightedGraph: weights must be square");
  for (Index i = 0; i < weights_.rows(); ++i) {
    if (weights_(i, i) != 0.0)
      fail(ErrorCode::InvalidArgument, "WeightedGraph: diagonal must be zero");
    for (Index j = 0; j < i; ++j)
      if (weights_(i, j) != weights_(j, i))
        fail(ErrorCode::InvalidArgument, "WeightedGraph: weights must be symmetric");
  }
}

std::size_t WeightedGraph::edge_count() const {
  std::size_t count = 0;
  for (Index i = 0; i < weights_.rows(); ++i)
    for (Index j = i + 1; j < weights_.cols(); ++j)
      if (weights_(i, j) != 0.0) ++count;
  return count;
}

LaplacianEstimate::LaplacianEstimate(Matrix values, double tol) : values_(std::move(values)) {
  if (values_.rows() != values_.cols())
    fail(ErrorCode::InvalidArgument, "LaplacianEstimate: matrix must be square");
  const double scale = std::max(1.0, values_.cwiseAbs().maxCoeff());
  for (Index i = 0; i < values_.rows(); ++i) {
    for (Index j = 0; j < i; ++j)
      if (values_(i, j) != values_(j, i))
        fail(ErrorCode::InvalidArgument, "LaplacianEstimate: matrix must be symmetric");
    const double row = values_(i, i) + row_offdiag_sum(values_, i);
    if (std::abs(row) > tol * scale) {
      std::ostringstream msg;
      msg << "LaplacianEstimate: row " << i << " sums to " << row;
      fail(ErrorCode::InvalidArgument, msg.str());
    }
  }
}

LaplacianEstimate LaplacianEstimate::from_off_diagonal(const Matrix& values) {
  if (values.rows() != values.cols())
    fail(ErrorCode::InvalidArgument, "LaplacianEstimate: matrix must be square");
  Matrix out = values;
  for (Index i = 0; i < out.rows(); ++i) out(i, i) = -row_offdiag_sum(values, i);
  return LaplacianEstimate(std::move(out));
}

LaplacianEstimate laplacian_from_weights(const WeightedGraph& g) {
  return LaplacianEstimate::from_off_diagonal(-g.weights());
}

SamplingOperator::SamplingOperator(std::size_t n_vertices,
                                   std::vector<std::vector<std::size_t>> selections)
    : n_(n_vertices), selections_(std::move(selections)) {
  offsets_.reserve(selections_.size() + 1);
  offsets_.push_back(0);
  for (const auto& sel : selections_) {
    std::vector<bool> seen(n_, false);
    for (std::size_t v : sel) {
      if (v >= n_) fail(ErrorCode::InvalidArgument, "SamplingOperator: vertex index out of range");
      if (seen[v]) fail(ErrorCode::InvalidArgument, "SamplingOperator: duplicate vertex");
      seen[v] = true;
    }
    offsets_.push_back(offsets_.back() + sel.size());
  }
}

Vector SamplingOperator::apply(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != n_ * n_snapshots())
    fail(ErrorCode::DimensionMismatch, "SamplingOperator::apply: x must have length N*K");
  Vector y(idx(total()));
  for (std::size_t k = 0; k < n_snapshots(); ++k)
    for (std::size_t m = 0; m < selections_[k].size(); ++m)
      y(idx(offsets_[k] + m)) = x(idx(k * n_ + selections_[k][m]));
  return y;
}

Vector SamplingOperator::adjoint(const Vector& y) const {
  if (static_cast<std::size_t>(y.size()) != total())
    fail(ErrorCode::DimensionMismatch, "SamplingOperator::adjoint: y must have length M_total");
  Vector x = Vector::Zero(idx(n_ * n_snapshots()));
  for (std::size_t k = 0; k < n_snapshots(); ++k)
    for (std::size_t m = 0; m < selections_[k].size(); ++m)
      x(idx(k * n_ + selections_[k][m])) = y(idx(offsets_[k] + m));
  return x;
}

Vector SamplingOperator::mask(std::size_t k) const {
  Vector m = Vector::Zero(idx(n_));
  for (std::size_t v : selections_.at(k)) m(idx(v)) = 1.0;
  return m;
}

StackedObservations StackedObservations::sample(const SamplingOperator& op,
                                                const Matrix& snapshots) {
  if (static_cast<std::size_t>(snapshots.rows()) != op.n_snapshots() ||
      static_cast<std::size_t>(snapshots.cols()) != op.n_vertices())
    fail(ErrorCode::DimensionMismatch, "StackedObservations::sample: snapshots must be K x N");
  StackedObservations obs;
  obs.offsets = op.offsets();
  obs.y.resize(idx(op.total()));
  for (std::size_t k = 0; k < op.n_snapshots(); ++k) {
    const auto& sel = op.selection(k);
    for (std::size_t m = 0; m < sel.size(); ++m)
      obs.y(idx(op.offsets()[k] + m)) = snapshots(idx(k), idx(sel[m]));
  }
  return obs;
}

void StackedObservations::check(const SamplingOperator& op) const {
  if (offsets != op.offsets() || static_cast<std::size_t>(y.size()) != op.total())
    fail(ErrorCode::DimensionMismatch, "observations do not match the sampling operator");
}

std::span<const double> StackedObservations::snapshot(std::size_t k) const {
  return {y.data() + offsets.at(k), offsets.at(k + 1) - offsets.at(k)};
}

PrecisionAssembly::PrecisionAssembly(Matrix block, double epsilon, std::size_t n_snapshots)
    : block_(std::move(block)), epsilon_(epsilon), k_(n_snapshots) {}

Vector PrecisionAssembly::apply(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim())
    fail(ErrorCode::DimensionMismatch, "PrecisionAssembly::apply: dimension mismatch");
  const Index n = block_.rows();
  Vector out(x.size());
  for (std::size_t k = 0; k < k_; ++k)
    out.segment(idx(k) * n, n).noalias() = block_ * x.segment(idx(k) * n, n);
  return out;
}

Matrix PrecisionAssembly::dense() const {
  const Index n = block_.rows();
  Matrix out = Matrix::Zero(idx(dim()), idx(dim()));
  for (std::size_t k = 0; k < k_; ++k) out.block(idx(k) * n, idx(k) * n, n, n) = block_;
  return out;
}

PrecisionAssembly assemble_precision(const Matrix& laplacian, double epsilon,
                                     std::size_t n_snapshots) {
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "assemble_precision: epsilon must be > 0");
  Matrix block = laplacian;
  block.diagonal().array() += epsilon;
  Eigen::LLT<Matrix> llt(block);
  if (llt.info() != Eigen::Success)
    fail(ErrorCode::NotPositiveDefinite, "assemble_precision: L + eps I is not positive definite");
  return PrecisionAssembly(std::move(block), epsilon, n_snapshots);
}

PrecisionAssembly assemble_precision(const LaplacianEstimate& laplacian, double epsilon,
                                     std::size_t n_snapshots) {
  return assemble_precision(laplacian.values(), epsilon, n_snapshots);
}

}  // namespace gsvb
