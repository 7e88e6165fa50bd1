#pragma once

#include <cstdint>

namespace gsvb {

/// Truncation rule for the hypergeometric series. A series stops once both
/// the current term and a geometric estimate of the remaining tail fall
/// below abs_tol * max(1, |partial sum|).
struct SeriesControl {
  double abs_tol = 1e-12;
  int max_terms_per_axis = 10000;

  void validate() const;
};

/// A real number stored as sign * exp(log_abs). sign is 0 for an exact zero.
struct SignedLog {
  double log_abs = 0.0;
  int sign = 1;

  double value() const;
  static SignedLog zero();
};

/// Rising factorial a(a+1)...(a+k-1), (a)_0 = 1. Saturates to +/-inf when
/// the product leaves the double range; use log_pochhammer there.
double pochhammer(double a, std::uint32_t k);
SignedLog log_pochhammer(double a, std::uint32_t k);

/// Kummer's confluent series M(a; b; x) = sum_m (a)_m / ((b)_m m!) x^m.
SignedLog log_kummer_m(double a, double b, double x, const SeriesControl& ctrl = {});

/// Humbert's confluent function of two variables,
///   sum_{m,n} (alpha)_{m+n} (beta)_n / ((gamma)_{m+n} m! n!) x^m y^n.
/// beta == 0 reduces exactly to M(alpha; gamma; x) and is taken for any y.
/// Otherwise |y| < 1 is required (DomainError).
SignedLog log_phi1(double alpha, double beta, double gamma, double x, double y,
                   const SeriesControl& ctrl = {});
double phi1(double alpha, double beta, double gamma, double x, double y,
            const SeriesControl& ctrl = {});

/// H(p,q,r,s,v,theta) = v^-p exp(-s/v) Phi1(q, r, p+q, s/v, 1-theta).
/// The normalizer of the CCH density, up to the Beta function factor.
SignedLog log_h_normalizer(double p, double q, double r, double s, double v, double theta,
                           const SeriesControl& ctrl = {});
double h_normalizer(double p, double q, double r, double s, double v, double theta,
                    const SeriesControl& ctrl = {});

/// log B(a, b) for a, b > 0.
double log_beta(double a, double b);

}  // namespace gsvb
