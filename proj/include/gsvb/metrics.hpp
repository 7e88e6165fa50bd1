#pragma once

#include "gsvb/graph_model.hpp"

namespace gsvb {

/// (1/K) sum_k |xhat_k - x_k|^2 / |x_k|^2 over the rows of K x N matrices.
/// Throws DimensionMismatch, or ZeroReference if a truth row is all zero.
double nmse_signal(const Matrix& estimates, const Matrix& truth);

/// |Lhat - L|_F^2 / |L|_F^2. Throws ZeroReference for L = 0.
double nmse_laplacian(const Matrix& estimate, const Matrix& truth);
double nmse_laplacian(const LaplacianEstimate& estimate, const LaplacianEstimate& truth);

/// 10 log10(sum |x_k|^2 / sum |noisy_k - x_k|^2). Throws ZeroReference when
/// the noise is identically zero.
double empirical_snr_db(const Matrix& clean, const Matrix& noisy);

}  // namespace gsvb
