#pragma once

#include <functional>

namespace gsvb {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  double l1_norm = 0.0;
};

/// Adaptive double-exponential (tanh-sinh) quadrature of f over [a, b].
/// Tolerates integrable endpoint singularities. Throws QuadratureFailure
/// when the error estimate exceeds max(rel_tol * L1, abs_tol) after the
/// refinement budget is spent, or when f produces a non-finite value.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol = 1e-12, double abs_tol = 0.0);

/// As integrate, but f(x, xc) also receives the exact offset of the nearer
/// endpoint: xc = a - x (<= 0) in the left half, b - x (> 0) in the right.
/// Lets f resolve singular factors such as (b - x)^(q-1) without forming b - x.
QuadratureResult integrate_complement(const std::function<double(double, double)>& f, double a,
                                      double b, double rel_tol = 1e-12, double abs_tol = 0.0);

}  // namespace gsvb
