#pragma once

#include <optional>

#include "gsvb/special_functions.hpp"

namespace gsvb {

/// Parameters of the generalized CCH density
///   f(x) ∝ t^{alpha p - 1} (1 - v t^alpha)^{q-1} (theta + (1-theta) v t^alpha)^{-r}
///          exp(-s t^alpha),  t = x - u,
/// supported on x in (u, u + v^{-1/alpha}].
struct GCCHParams {
  double alpha = 1.0;
  double p = 1.0;
  double q = 1.0;
  double r = 0.0;
  double s = 0.0;
  double v = 1.0;
  double theta = 1.0;
  double u = 0.0;

  /// Throws DomainError unless alpha, p, q, v > 0 and the theta factor is
  /// positive over the support.
  void validate() const;
  double support_width() const;
};

/// Log of the normalized density. The normalizer is alpha^{-1} B(p,q) H(p,q,r,s,v,theta);
/// the alpha^{-1} is the Jacobian of t -> t^alpha, so alpha = 1 is the plain CCH density.
/// x == u is accepted (the limit t -> 0+); anything else outside the support
/// is a DomainError.
double gcch_log_pdf(double x, const GCCHParams& params, const SeriesControl& ctrl = {});

/// Closed-form mean
///   u + [B(p + 1/alpha, q) / B(p, q)] H(p + 1/alpha, ...) / H(p, ...).
/// The Beta ratio equals p / (p + q) when alpha = 1.
double gcch_mean(const GCCHParams& params, const SeriesControl& ctrl = {});

/// Independent route to the mean: adaptive quadrature of the unnormalized
/// density, first moment over mass. Throws QuadratureFailure.
double gcch_mean_quadrature(const GCCHParams& params);

/// Integral of exp(gcch_log_pdf) over the support, by adaptive quadrature.
double gcch_total_mass(const GCCHParams& params, const SeriesControl& ctrl = {});

enum class EdgePosteriorCase { FullGCCH, ThreeParamGamma, Exponential, DegenerateZero };

const char* to_string(EdgePosteriorCase tag) noexcept;

/// Classification of the posterior of one adjacency weight w, whose log density is
///   (K/2) ln[c (w-u)^2 + c z] - (lambda/2) (w-u)^2       (c != 0),
///   (K/2) ln[g - d w] - (lambda/2) w^2                    (c == 0),
/// restricted to the side w >= u where the GCCH form lives (u = 0 when c == 0).
/// (c, d, g) are the coefficients of det(L + eps I) = c w^2 - d w + g and may
/// carry any common positive scale factor.
struct EdgePosterior {
  EdgePosteriorCase tag = EdgePosteriorCase::DegenerateZero;
  double u = 0.0;  // center d / (2c); 0 when c == 0
  double z = 0.0;  // g / c - d^2 / (4 c^2); 0 when c == 0
  bool has_center = false;  // c != 0
  /// Set when the closed form applies (c < 0, z < 0): alpha = 2, p = 1/2,
  /// q = K/2 + 1, r = 0, s = lambda/2, v = 1/(-z), theta = 0, location u.
  std::optional<GCCHParams> gcch;
};

/// Relative threshold below which c, d, g (and z) count as zero.
inline constexpr double kEdgeZeroTolerance = 1e-12;

EdgePosterior classify_edge_posterior(double c, double d, double g, double lambda, int K);

/// Posterior mean of w. Returns exactly 0 in the degenerate case. Uses the
/// closed GCCH mean when it applies and the quadrature route otherwise, or
/// when the series fails. Throws InvalidArgument (lambda <= 0, K < 1) or
/// QuadratureFailure (no positive-density region).
double edge_posterior_mean(double c, double d, double g, double lambda, int K,
                           const SeriesControl& ctrl = {});

/// Quadrature route for every non-degenerate case.
double edge_posterior_mean_quadrature(double c, double d, double g, double lambda, int K);

}  // namespace gsvb
