#pragma once

// Independent reference implementations used only by the tests. They favour
// the most direct formulation (plain sums, dense matrices, Gauss-Kronrod)
// over speed, and share no code with the library's numerical paths.

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Adaptive 61-point Gauss-Kronrod on [a, b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-13) {
  double err = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol, &err);
}

// Sum_{m,n} (a)_{m+n} (b)_n / ((c)_{m+n} m! n!) x^m y^n by explicit term
// recursion in long double; meant for moderate parameters.
inline double phi1_direct(double a_in, double b_in, double c_in, double x, double y,
                          int terms = 400) {
  const long double a = a_in, b = b_in, c = c_in;
  long double total = 0.0L;
  long double row_start = 1.0L;  // term (m, 0)
  for (int m = 0; m < terms; ++m) {
    long double term = row_start;
    long double row = 0.0L;
    for (int n = 0; n < terms; ++n) {
      row += term;
      if (term == 0.0L || std::fabs(term) < 1e-22L * std::fabs(row)) break;
      term *= (a + m + n) * (b + n) / ((c + m + n) * (n + 1.0L)) * y;
    }
    total += row;
    if (m > 5 && std::fabs(row) < 1e-22L * std::fabs(total)) break;
    row_start *= (a + m) / ((c + m) * (m + 1.0L)) * x;
  }
  return static_cast<double>(total);
}

// 1F1(a; c; x)
inline double kummer_direct(double a_in, double c_in, double x, int terms = 2000) {
  const long double a = a_in, c = c_in;
  long double term = 1.0L, total = 0.0L;
  for (int m = 0; m < terms; ++m) {
    total += term;
    if (std::fabs(term) < 1e-22L * std::fabs(total) && m > 3) break;
    term *= (a + m) / ((c + m) * (m + 1.0L)) * x;
  }
  return static_cast<double>(total);
}

// 2F1(a, b; c; y), |y| < 1. For y < 0 the sum is taken after Pfaff's
// transformation 2F1(a, b; c; y) = (1-y)^(-a) 2F1(a, c-b; c; y/(y-1)), which
// avoids the cancellation of the alternating series.
inline double gauss_direct(double a_in, double b_in, double c_in, double y_in, int terms = 20000) {
  long double a = a_in, b = b_in, y = y_in, prefactor = 1.0L;
  const long double c = c_in;
  if (y < 0.0L) {
    prefactor = std::pow(1.0L - y, -a);
    b = c - b;
    y = y / (y - 1.0L);
  }
  long double term = 1.0L, total = 0.0L;
  for (int n = 0; n < terms; ++n) {
    total += term;
    if (std::fabs(term) < 1e-22L * std::fabs(total) && n > 3) break;
    term *= (a + n) * (b + n) / ((c + n) * (n + 1.0L)) * y;
  }
  return static_cast<double>(prefactor * total);
}

// B(p,q) H(p,q,r,s,v,theta) as the integral of the unnormalized CCH kernel
//   t^(p-1) (1-vt)^(q-1) (theta + (1-theta) vt)^(-r) exp(-s t)
// over (0, 1/v]. The range is split at its midpoint. A half whose endpoint
// exponent is below zero is integrated in z = t^p (lower) or z = (1-vt)^q
// (upper), which removes the power singularity; otherwise directly in t.
inline double cch_mass(double p, double q, double r, double s, double v, double theta) {
  const double top = 1.0 / v, mid = 0.5 * top;
  auto kernel = [&](double t) {
    if (t <= 0.0 || t >= top) return 0.0;
    return std::pow(t, p - 1.0) * std::pow(1.0 - v * t, q - 1.0) *
           std::pow(theta + (1.0 - theta) * v * t, -r) * std::exp(-s * t);
  };
  auto rest = [&](double t) {
    return std::pow(theta + (1.0 - theta) * v * t, -r) * std::exp(-s * t);
  };
  double lo_part = 0.0, hi_part = 0.0;
  if (p < 1.0) {
    // t^(p-1) dt = dz / p
    lo_part = integrate(
        [&](double z) {
          const double t = std::pow(z, 1.0 / p);
          return std::pow(1.0 - v * t, q - 1.0) * rest(t) / p;
        },
        0.0, std::pow(mid, p));
  } else {
    lo_part = integrate(kernel, 0.0, mid);
  }
  if (q < 1.0) {
    // (1-vt)^(q-1) dt = -dz / (q v)
    hi_part = integrate(
        [&](double z) {
          const double t = (1.0 - std::pow(z, 1.0 / q)) / v;
          return std::pow(t, p - 1.0) * rest(t) / (q * v);
        },
        0.0, std::pow(0.5, q));
  } else {
    hi_part = integrate(kernel, mid, top);
  }
  return lo_part + hi_part;
}

// Mean of the one-sided edge posterior
//   q(w) ∝ det(w)^{K/2} exp(-lambda/2 (w-u)^2),  w >= u,
// det(w) = c w^2 - d w + g, u = d/(2c) (u = 0 when c = 0), by
// integrating over [u, u + reach] with the non-positive part of det removed.
inline double edge_mean(double c, double d, double g, double lambda, int K) {
  const double u = c != 0.0 ? d / (2.0 * c) : 0.0;
  auto det = [&](double w) { return (c * w - d) * w + g; };
  const double reach = 60.0 / std::sqrt(lambda);
  // Locate where det > 0 on [u, u + reach] by a fine scan, then refine the
  // bracket ends by bisection.
  const int n = 20000;
  double lo = std::numeric_limits<double>::quiet_NaN(), hi = lo;
  for (int i = 0; i <= n; ++i) {
    const double w = u + reach * i / n;
    if (det(w) > 0.0) {
      if (std::isnan(lo)) lo = w;
      hi = w;
    }
  }
  auto refine = [&](double inside, double outside) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      (det(mid) > 0.0 ? inside : outside) = mid;
    }
    return inside;
  };
  if (lo > u) lo = refine(lo, lo - reach / n);
  if (hi < u + reach) hi = refine(hi, hi + reach / n);
  double peak = -std::numeric_limits<double>::infinity();
  auto logd = [&](double w) {
    const double v = det(w);
    return v > 0.0 ? K / 2.0 * std::log(v) - 0.5 * lambda * (w - u) * (w - u)
                   : -std::numeric_limits<double>::infinity();
  };
  for (int i = 0; i <= 2000; ++i) peak = std::max(peak, logd(lo + (hi - lo) * i / 2000.0));
  auto dens = [&](double w) { return std::exp(logd(w) - peak); };
  const double mass = integrate(dens, lo, hi);
  const double first = integrate([&](double w) { return w * dens(w); }, lo, hi);
  return first / mass;
}

// Dense Gaussian posterior for y = Psi x + e with precision
// I_K ⊗ (L + eps I) and noise precision alpha.
struct DensePosterior {
  Vector mu;
  Matrix sigma;
};

inline DensePosterior dense_posterior(const Matrix& laplacian, double eps, double alpha,
                                      const std::vector<std::vector<std::size_t>>& sel,
                                      const Vector& y) {
  const auto n = laplacian.rows();
  const auto k = static_cast<Eigen::Index>(sel.size());
  Eigen::Index m_total = 0;
  for (const auto& s : sel) m_total += static_cast<Eigen::Index>(s.size());
  Matrix psi = Matrix::Zero(m_total, n * k);
  Eigen::Index row = 0;
  for (Eigen::Index b = 0; b < k; ++b)
    for (std::size_t v : sel[static_cast<std::size_t>(b)])
      psi(row++, b * n + static_cast<Eigen::Index>(v)) = 1.0;
  Matrix block = laplacian;
  block.diagonal().array() += eps;
  Matrix big = Matrix::Zero(n * k, n * k);
  for (Eigen::Index b = 0; b < k; ++b) big.block(b * n, b * n, n, n) = block;
  const Matrix precision = big + alpha * psi.transpose() * psi;
  DensePosterior out;
  out.sigma = precision.fullPivLu().inverse();
  out.mu = out.sigma * (alpha * psi.transpose() * y);
  return out;
}

// Random weighted graph Laplacian with edge probability `density`.
inline Matrix random_laplacian(int n, std::mt19937_64& rng, double density = 0.5,
                               double max_weight = 2.0) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix w = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (unit(rng) < density) w(i, j) = w(j, i) = max_weight * unit(rng);
  Matrix l = -w;
  for (int i = 0; i < n; ++i) l(i, i) = w.row(i).sum();
  return l;
}

}  // namespace oracle
