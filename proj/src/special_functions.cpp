#include "gsvb/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/hypergeometric_1F1.hpp>

#include "gsvb/error.hpp"

namespace gsvb {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLargeKummerArgument = 200.0;

bool is_nonpositive_integer(double x) { return x <= 0.0 && std::floor(x) == x; }

// Signed logarithm in extended precision, so that exponentiating a large log
// at the end does not cost the last bits of the value.
struct WideLog {
  long double log_abs = kNegInf;
  int sign = 0;

  SignedLog narrow() const { return {static_cast<double>(log_abs), sign}; }
  double value() const { return sign == 0 ? 0.0 : static_cast<double>(sign * std::exp(log_abs)); }
};

// Partial sum of a series in which the running sum and the current term are
// long doubles sharing a scale factor exp(frame). Term ratios multiply
// without compounding log rounding, and the extended mantissa keeps a sum of
// a few hundred terms accurate to the last bit of a double. The frame moves
// only when a magnitude leaves [1e-200, 1e200], so sums far outside the
// double range stay representable.
class FramedSum {
 public:
  // Starts with a first term of sign * exp(log_abs).
  explicit FramedSum(long double log_abs = 0.0L, int sign = 1)
      : frame_(log_abs), acc_(sign), term_(sign) {}

  // Multiplies the current term by `ratio` and adds it to the sum.
  void next_term(long double ratio) {
    term_ *= ratio;
    acc_ += term_;
    renormalize();
  }

  // Adds an independent term sign * exp(log_abs); it becomes the current term.
  void add_log(long double log_abs, int sign) {
    term_ = sign == 0 ? 0.0L : sign * std::exp(log_abs - frame_);
    acc_ += term_;
    renormalize();
  }

  WideLog sum() const {
    if (acc_ == 0.0L) return {};
    return {frame_ + std::log(std::fabs(acc_)), acc_ > 0.0L ? 1 : -1};
  }

  // True when the current term and the tail bound term * factor * ratio /
  // (1 - ratio) are both below the absolute tolerance, or below the rounding
  // of the sum when that is coarser. `ratio` must bound every later term
  // ratio; `factor` covers any further growth of the terms.
  bool converged(double ratio, double abs_tol, long double factor = 1.0L) const {
    if (!(ratio < 1.0)) return false;
    const long double tol =
        std::max(std::exp(std::log(static_cast<long double>(abs_tol)) - frame_),
                 kRoundoff * std::fabs(acc_));
    const long double t = std::fabs(term_);
    return t <= tol && t * factor * ratio / (1.0 - ratio) <= tol;
  }

 private:
  static constexpr long double kRoundoff = 0x1p-60L;

  void renormalize() {
    const long double mag = std::max(std::fabs(acc_), std::fabs(term_));
    if (mag > 1e200L || (mag < 1e-200L && mag > 0.0L)) {
      acc_ /= mag;
      term_ /= mag;
      frame_ += std::log(mag);
    }
  }

  long double frame_;
  long double acc_;
  long double term_;
};

}  // namespace

void SeriesControl::validate() const {
  if (!(abs_tol > 0.0)) fail(ErrorCode::InvalidArgument, "SeriesControl: abs_tol must be > 0");
  if (max_terms_per_axis < 1)
    fail(ErrorCode::InvalidArgument, "SeriesControl: max_terms_per_axis must be >= 1");
}

double SignedLog::value() const {
  if (sign == 0) return 0.0;
  return sign * std::exp(log_abs);
}

SignedLog SignedLog::zero() { return {kNegInf, 0}; }

double pochhammer(double a, std::uint32_t k) {
  double product = 1.0;
  for (std::uint32_t i = 0; i < k; ++i) {
    product *= a + i;
    if (product == 0.0 || std::isinf(product)) break;
  }
  return product;
}

SignedLog log_pochhammer(double a, std::uint32_t k) {
  SignedLog out{0.0, 1};
  for (std::uint32_t i = 0; i < k; ++i) {
    const double f = a + i;
    if (f == 0.0) return SignedLog::zero();
    out.log_abs += std::log(std::abs(f));
    if (f < 0.0) out.sign = -out.sign;
  }
  return out;
}

namespace {

WideLog kummer_series(double a, double b, double x, const SeriesControl& ctrl) {
  ctrl.validate();
  if (is_nonpositive_integer(b))
    fail(ErrorCode::DomainError, "kummer M: b must not be zero or a negative integer");
  // Kummer's transformation M(a; b; x) = e^x M(b - a; b; -x) trades an
  // alternating series for one with terms of constant sign eventually.
  if (x < 0.0 && !is_nonpositive_integer(a)) {
    WideLog m = kummer_series(b - a, b, -x, ctrl);
    if (m.sign != 0) m.log_abs += x;
    return m;
  }
  // The terms peak near m = x, so a large argument would need more than x
  // terms; Boost's evaluation switches to asymptotic forms there.
  if (x > kLargeKummerArgument) {
    int sign = 0;
    double log_abs = 0.0;
    try {
      log_abs = boost::math::log_hypergeometric_1F1(a, b, x, &sign);
    } catch (const std::exception& e) {
      fail(ErrorCode::NonConvergent, std::string("kummer M: ") + e.what());
    }
    if (sign == 0) return {};
    if (!std::isfinite(log_abs)) fail(ErrorCode::NonConvergent, "kummer M: non-finite result");
    return WideLog{log_abs, sign};
  }

  FramedSum acc;
  for (int m = 0; m < ctrl.max_terms_per_axis; ++m) {
    const double numer = (a + m) * x;
    if (numer == 0.0) return acc.sum();  // terminating series
    acc.next_term((static_cast<long double>(a) + m) * x / ((static_cast<long double>(b) + m) * (m + 1.0L)));

    const double next = m + 1.0;
    if (next > -a && next > -b) {
      // sup over j >= next of |(a+j) x / ((b+j)(j+1))|
      const double bound =
          std::abs(x) * (1.0 + std::max(0.0, a - b) / (b + next)) / (next + 1.0);
      if (acc.converged(bound, ctrl.abs_tol)) return acc.sum();
    }
  }
  fail(ErrorCode::NonConvergent, "kummer M: series did not converge within " +
                                     std::to_string(ctrl.max_terms_per_axis) + " terms");
}

WideLog phi1_series(double alpha, double beta, double gamma, double x, double y,
                    const SeriesControl& ctrl) {
  ctrl.validate();
  if (is_nonpositive_integer(gamma))
    fail(ErrorCode::DomainError, "phi1: gamma must not be zero or a negative integer");
  if (beta == 0.0 || y == 0.0) return kummer_series(alpha, gamma, x, ctrl);
  if (!(std::abs(y) < 1.0))
    fail(ErrorCode::DomainError, "phi1: |y| < 1 required when beta != 0");
  if (y < 0.0) {
    // Phi1(a, b, c; x, y) = (1 - y)^(-b) e^x Phi1(c - a, b, c; -x, y / (y - 1)),
    // whose y-series has terms of one sign.
    WideLog t = phi1_series(gamma - alpha, beta, gamma, -x, y / (y - 1.0), ctrl);
    if (t.sign != 0) t.log_abs += x - beta * std::log1p(-static_cast<long double>(y));
    return t;
  }

  // Phi1 = sum_n c_n M(alpha+n; gamma+n; x) with
  // c_n = (alpha)_n (beta)_n / ((gamma)_n n!) y^n.
  // The coefficient is carried as coef * exp(coef_frame).
  const WideLog m0 = kummer_series(alpha, gamma, x, ctrl);
  FramedSum acc(m0.log_abs, m0.sign);
  if (m0.sign == 0) acc = FramedSum(0.0L, 0);
  long double coef = 1.0L;
  long double coef_frame = 0.0L;
  long double previous = m0.sign == 0 ? kNegInf : m0.log_abs;
  for (int n = 0; n < ctrl.max_terms_per_axis; ++n) {
    const long double coef_ratio = (static_cast<long double>(alpha) + n) *
                                   (static_cast<long double>(beta) + n) * y /
                                   ((static_cast<long double>(gamma) + n) * (n + 1.0L));
    if (coef_ratio == 0.0L) return acc.sum();  // terminating in n
    coef *= coef_ratio;
    if (const long double mag = std::fabs(coef); mag > 1e200L || mag < 1e-200L) {
      coef /= mag;
      coef_frame += std::log(mag);
    }

    const WideLog m = kummer_series(alpha + n + 1, gamma + n + 1, x, ctrl);
    const int sign = (coef > 0.0L ? 1 : -1) * m.sign;
    const long double log_term = coef_frame + std::log(std::fabs(coef)) + m.log_abs;
    acc.add_log(log_term, sign);

    const double k = n + 1.0;
    if (k > -alpha && k > -beta && k > -gamma) {
      // sup over j >= k of the coefficient ratio (alpha+j)(beta+j) y / ((gamma+j)(j+1)).
      const double ratio =
          y * (1.0 + std::max(0.0, alpha + beta - gamma - 1.0) / (gamma + k) +
               std::max(0.0, alpha * beta - gamma) / ((gamma + k) * (k + 1.0)));
      // Growth of the Kummer factor M(alpha+j; gamma+j; x) beyond the current one:
      // it rises toward e^x when x > 0 and alpha < gamma, stays in (0, 1] when
      // x < 0 and alpha < gamma, and falls in j otherwise for x > 0.
      long double factor = 1.0L;
      bool bounded = true;
      if (m.sign == 0) {
        bounded = false;
      } else if (x > 0.0 && alpha < gamma) {
        factor = std::max(1.0L, std::exp(static_cast<long double>(x) - m.log_abs));
      } else if (x < 0.0 && alpha < gamma && alpha + k > 0.0) {
        factor = std::max(1.0L, std::exp(-m.log_abs));
      } else if (x < 0.0) {
        bounded = false;
      }
      double effective = ratio;
      if (!bounded && sign != 0 && previous != kNegInf)
        effective = std::max(ratio, static_cast<double>(std::exp(log_term - previous)));
      if (acc.converged(effective, ctrl.abs_tol, factor)) return acc.sum();
    }
    previous = sign == 0 ? kNegInf : log_term;
  }
  fail(ErrorCode::NonConvergent, "phi1: outer series did not converge within " +
                                     std::to_string(ctrl.max_terms_per_axis) + " terms");
}

}  // namespace

SignedLog log_kummer_m(double a, double b, double x, const SeriesControl& ctrl) {
  return kummer_series(a, b, x, ctrl).narrow();
}

SignedLog log_phi1(double alpha, double beta, double gamma, double x, double y,
                   const SeriesControl& ctrl) {
  return phi1_series(alpha, beta, gamma, x, y, ctrl).narrow();
}

double phi1(double alpha, double beta, double gamma, double x, double y,
            const SeriesControl& ctrl) {
  return phi1_series(alpha, beta, gamma, x, y, ctrl).value();
}

SignedLog log_h_normalizer(double p, double q, double r, double s, double v, double theta,
                           const SeriesControl& ctrl) {
  if (!(v > 0.0)) fail(ErrorCode::DomainError, "H: v must be > 0");
  const SignedLog phi = log_phi1(q, r, p + q, s / v, 1.0 - theta, ctrl);
  if (phi.sign == 0) return phi;
  return {-p * std::log(v) - s / v + phi.log_abs, phi.sign};
}

double h_normalizer(double p, double q, double r, double s, double v, double theta,
                    const SeriesControl& ctrl) {
  return log_h_normalizer(p, q, r, s, v, theta, ctrl).value();
}

double log_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) fail(ErrorCode::DomainError, "log_beta: arguments must be > 0");
  return boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
}

}  // namespace gsvb
