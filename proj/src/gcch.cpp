#include "gsvb/gcch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "gsvb/error.hpp"
#include "gsvb/quadrature.hpp"

namespace gsvb {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Log of the density kernel in t = x - u, without the normalizer. `gap`,
// when positive and smaller than t, is the exact distance width - t and keeps
// the factor 1 - v t^alpha accurate next to the right endpoint.
double log_kernel(double t, const GCCHParams& pr, double gap = 0.0) {
  const double ap1 = pr.alpha * pr.p - 1.0;
  double out = 0.0;
  if (t == 0.0) {
    if (ap1 > 0.0) return -kInf;
    if (ap1 < 0.0) return kInf;
  } else if (ap1 != 0.0) {
    out += ap1 * std::log(t);
  }
  double vt, log_rest;  // v t^alpha and log(1 - v t^alpha)
  if (gap > 0.0 && gap < t) {
    const double l = pr.alpha * std::log1p(-gap / pr.support_width());
    vt = std::exp(l);
    log_rest = std::log(-std::expm1(l));
  } else {
    vt = std::min(1.0, pr.v * std::pow(t, pr.alpha));
    log_rest = std::log1p(-vt);
  }
  if (pr.q != 1.0) out += (pr.q - 1.0) * log_rest;
  if (pr.r != 0.0) out -= pr.r * std::log(pr.theta + (1.0 - pr.theta) * vt);
  out -= pr.s * vt / pr.v;
  return out;
}

double log_normalizer(const GCCHParams& pr, const SeriesControl& ctrl) {
  const SignedLog h = log_h_normalizer(pr.p, pr.q, pr.r, pr.s, pr.v, pr.theta, ctrl);
  if (h.sign <= 0) fail(ErrorCode::DomainError, "GCCH: H normalizer is not positive");
  return -std::log(pr.alpha) + log_beta(pr.p, pr.q) + h.log_abs;
}

// Largest finite value of h over a uniform grid on [a, b]; used to rescale
// integrands so that exp() stays in range.
// Largest finite value of h(t, b - t) over a uniform grid on [a, b]; used to
// rescale integrands so that exp() stays in range.
template <class F>
double grid_max(F&& h, double a, double b, int points = 257) {
  double best = -kInf;
  for (int i = 0; i <= points; ++i) {
    const double t = a + (b - a) * (i / static_cast<double>(points));
    const double val = h(t, b - t);
    if (std::isfinite(val)) best = std::max(best, val);
  }
  return std::isfinite(best) ? best : 0.0;
}

struct Moments {
  double mass = 0.0;
  double first = 0.0;  // integral of t * density
};

// log_density(t, xc) takes the endpoint offset of integrate_complement.
template <class F>
Moments integrate_moments(F&& log_density, double a, double b) {
  const double ref = grid_max(log_density, a, b);
  auto dens = [&](double t, double xc) {
    const double val = log_density(t, xc);
    return val == -kInf ? 0.0 : std::exp(val - ref);
  };
  Moments m;
  m.mass = integrate_complement(dens, a, b, 1e-12).value;
  m.first = integrate_complement([&](double t, double xc) { return t * dens(t, xc); }, a, b, 1e-12)
                .value;
  if (!(m.mass > 0.0)) fail(ErrorCode::QuadratureFailure, "posterior has zero mass on its bracket");
  return m;
}

}  // namespace

void GCCHParams::validate() const {
  auto positive = [](double x) { return x > 0.0 && std::isfinite(x); };
  if (!positive(alpha) || !positive(p) || !positive(q) || !positive(v))
    fail(ErrorCode::DomainError, "GCCH: alpha, p, q, v must be positive and finite");
  if (!std::isfinite(r) || !std::isfinite(s) || !std::isfinite(theta) || !std::isfinite(u))
    fail(ErrorCode::DomainError, "GCCH: parameters must be finite");
  if (r != 0.0 && theta < 0.0)
    fail(ErrorCode::DomainError, "GCCH: theta must be >= 0 when r != 0");
}

double GCCHParams::support_width() const { return std::pow(v, -1.0 / alpha); }

double gcch_log_pdf(double x, const GCCHParams& params, const SeriesControl& ctrl) {
  params.validate();
  const double t = x - params.u;
  const double width = params.support_width();
  if (!(t >= 0.0) || t > width * (1.0 + 1e-12))
    fail(ErrorCode::DomainError, "GCCH: x outside the support (u, u + v^(-1/alpha)]");
  return log_kernel(std::min(t, width), params) - log_normalizer(params, ctrl);
}

double gcch_mean(const GCCHParams& params, const SeriesControl& ctrl) {
  params.validate();
  const double p1 = params.p + 1.0 / params.alpha;
  const SignedLog h0 =
      log_h_normalizer(params.p, params.q, params.r, params.s, params.v, params.theta, ctrl);
  const SignedLog h1 =
      log_h_normalizer(p1, params.q, params.r, params.s, params.v, params.theta, ctrl);
  if (h0.sign <= 0 || h1.sign <= 0)
    fail(ErrorCode::DomainError, "GCCH mean: H normalizer is not positive");
  const double log_shift =
      log_beta(p1, params.q) - log_beta(params.p, params.q) + h1.log_abs - h0.log_abs;
  return params.u + std::exp(log_shift);
}

double gcch_mean_quadrature(const GCCHParams& params) {
  params.validate();
  const Moments m = integrate_moments(
      [&](double t, double xc) { return log_kernel(t, params, xc); }, 0.0, params.support_width());
  return params.u + m.first / m.mass;
}

double gcch_total_mass(const GCCHParams& params, const SeriesControl& ctrl) {
  params.validate();
  const double log_norm = log_normalizer(params, ctrl);
  return integrate_complement(
             [&](double t, double xc) { return std::exp(log_kernel(t, params, xc) - log_norm); },
             0.0, params.support_width(), 1e-12)
      .value;
}

const char* to_string(EdgePosteriorCase tag) noexcept {
  switch (tag) {
    case EdgePosteriorCase::FullGCCH: return "FullGCCH";
    case EdgePosteriorCase::ThreeParamGamma: return "ThreeParamGamma";
    case EdgePosteriorCase::Exponential: return "Exponential";
    case EdgePosteriorCase::DegenerateZero: return "DegenerateZero";
  }
  return "Unknown";
}

EdgePosterior classify_edge_posterior(double c, double d, double g, double lambda, int K) {
  EdgePosterior out;
  const double scale = std::max({std::abs(c), std::abs(d), std::abs(g)});
  if (scale == 0.0) return out;
  const double tol = kEdgeZeroTolerance * scale;
  const bool c_zero = std::abs(c) <= tol;
  const bool d_zero = std::abs(d) <= tol;

  if (c_zero) {
    out.tag = d_zero ? EdgePosteriorCase::Exponential : EdgePosteriorCase::ThreeParamGamma;
    return out;
  }
  out.has_center = true;
  out.u = d / (2.0 * c);
  out.z = g / c - out.u * out.u;
  const bool z_zero = std::abs(out.z) <= kEdgeZeroTolerance * (out.u * out.u + std::abs(g / c));
  if (z_zero) {
    out.z = 0.0;
    out.tag = EdgePosteriorCase::ThreeParamGamma;
    return out;
  }
  out.tag = EdgePosteriorCase::FullGCCH;
  if (c < 0.0 && out.z < 0.0 && lambda > 0.0 && K >= 1) {
    GCCHParams pr;
    pr.alpha = 2.0;
    pr.p = 0.5;
    pr.q = K / 2.0 + 1.0;
    pr.r = 0.0;
    pr.s = lambda / 2.0;
    pr.v = 1.0 / (-out.z);
    pr.theta = 0.0;
    pr.u = out.u;
    out.gcch = pr;
  }
  return out;
}

double edge_posterior_mean_quadrature(double c, double d, double g, double lambda, int K) {
  if (!(lambda > 0.0) || K < 1)
    fail(ErrorCode::InvalidArgument, "edge posterior: lambda must be > 0 and K >= 1");
  const EdgePosterior post = classify_edge_posterior(c, d, g, lambda, K);
  if (post.tag == EdgePosteriorCase::DegenerateZero) return 0.0;

  const double scale = std::max({std::abs(c), std::abs(d), std::abs(g)});
  const double cs = c / scale, ds = d / scale, gs = g / scale;
  const double half_k = K / 2.0;
  const double reach = (10.0 + std::sqrt(static_cast<double>(K))) / std::sqrt(lambda);

  // Positive-density interval [lo, hi] in t = w - u, and det(u + t) on it.
  double lo = 0.0, hi = reach;
  std::function<double(double)> det;
  if (post.tag == EdgePosteriorCase::Exponential) {
    if (!(gs > 0.0)) fail(ErrorCode::QuadratureFailure, "edge posterior: det is never positive");
    return std::sqrt(2.0 / (std::numbers::pi * lambda));  // half-normal
  }
  if (!post.has_center) {
    // det = g - d w, centered at 0
    if (ds > 0.0) {
      if (!(gs > 0.0)) fail(ErrorCode::QuadratureFailure, "edge posterior: det is never positive");
      hi = std::min(reach, gs / ds);
    } else {
      lo = std::max(0.0, gs / ds);
      hi = lo + reach;
    }
    det = [=](double t) { return gs - ds * t; };
  } else {
    const double z = post.z;
    if (cs > 0.0) {
      lo = z < 0.0 ? std::sqrt(-z) : 0.0;
      hi = lo + reach;
      det = z < 0.0 ? std::function<double(double)>([=](double t) {
        const double a = std::sqrt(-z);
        return cs * (t - a) * (t + a);
      })
                    : std::function<double(double)>([=](double t) { return cs * (t * t + z); });
    } else {
      if (!(z < 0.0)) fail(ErrorCode::QuadratureFailure, "edge posterior: det is never positive");
      const double a = std::sqrt(-z);
      hi = std::min(a, reach);
      det = [=](double t) { return -cs * (a - t) * (a + t); };
    }
  }
  if (!(hi > lo)) fail(ErrorCode::QuadratureFailure, "edge posterior: empty bracket");

  auto log_density = [&](double t) {
    const double value = det(t);
    if (!(value > 0.0)) return -kInf;
    return half_k * std::log(value) - 0.5 * lambda * t * t;
  };
  const Moments m = integrate_moments([&](double t, double) { return log_density(t); }, lo, hi);
  return post.u + m.first / m.mass;
}

double edge_posterior_mean(double c, double d, double g, double lambda, int K,
                           const SeriesControl& ctrl) {
  if (K < 1) fail(ErrorCode::InvalidArgument, "edge posterior: K must be >= 1");
  const EdgePosterior post = classify_edge_posterior(c, d, g, lambda, K);
  if (post.tag == EdgePosteriorCase::DegenerateZero) return 0.0;
  if (!(lambda > 0.0)) fail(ErrorCode::InvalidArgument, "edge posterior: lambda must be > 0");
  if (post.gcch) {
    try {
      return gcch_mean(*post.gcch, ctrl);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonConvergent && e.code() != ErrorCode::DomainError) throw;
    }
  }
  return edge_posterior_mean_quadrature(c, d, g, lambda, K);
}

}  // namespace gsvb
