#include "gsvb/metrics.hpp"

#include <cmath>

#include "gsvb/error.hpp"

namespace gsvb {
namespace {

void same_shape(const Matrix& a, const Matrix& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    fail(ErrorCode::DimensionMismatch, std::string(who) + ": shapes differ");
}

}  // namespace

double nmse_signal(const Matrix& estimates, const Matrix& truth) {
  same_shape(estimates, truth, "nmse_signal");
  if (truth.rows() == 0) fail(ErrorCode::DimensionMismatch, "nmse_signal: no snapshots");
  double total = 0.0;
  for (Eigen::Index k = 0; k < truth.rows(); ++k) {
    const double ref = truth.row(k).squaredNorm();
    if (ref == 0.0) fail(ErrorCode::ZeroReference, "nmse_signal: all-zero truth snapshot");
    total += (estimates.row(k) - truth.row(k)).squaredNorm() / ref;
  }
  return total / static_cast<double>(truth.rows());
}

double nmse_laplacian(const Matrix& estimate, const Matrix& truth) {
  same_shape(estimate, truth, "nmse_laplacian");
  const double ref = truth.squaredNorm();
  if (ref == 0.0) fail(ErrorCode::ZeroReference, "nmse_laplacian: zero reference Laplacian");
  return (estimate - truth).squaredNorm() / ref;
}

double nmse_laplacian(const LaplacianEstimate& estimate, const LaplacianEstimate& truth) {
  return nmse_laplacian(estimate.values(), truth.values());
}

double empirical_snr_db(const Matrix& clean, const Matrix& noisy) {
  same_shape(clean, noisy, "empirical_snr_db");
  const double noise = (noisy - clean).squaredNorm();
  if (noise == 0.0) fail(ErrorCode::ZeroReference, "empirical_snr_db: noise is identically zero");
  return 10.0 * std::log10(clean.squaredNorm() / noise);
}

}  // namespace gsvb
