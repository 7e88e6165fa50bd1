#include "gsvb/quadrature.hpp"

#include <cmath>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "gsvb/error.hpp"

namespace gsvb {

namespace {

boost::math::quadrature::tanh_sinh<double>& integrator() {
  // Abscissa tables are costly to build; one integrator per thread.
  thread_local boost::math::quadrature::tanh_sinh<double> instance(18);
  return instance;
}

void check_accuracy(const QuadratureResult& out, double a, double b, double rel_tol,
                    double abs_tol) {
  const double accept = std::max(std::max(rel_tol, 1e-9) * out.l1_norm, abs_tol);
  if (!std::isfinite(out.value) || !(out.error <= accept)) {
    std::ostringstream msg;
    msg << "integrate: refinement budget exhausted on [" << a << ", " << b
        << "], error estimate " << out.error << " (value " << out.value << ")";
    fail(ErrorCode::QuadratureFailure, msg.str());
  }
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double rel_tol, double abs_tol) {
  if (!(b > a)) fail(ErrorCode::InvalidArgument, "integrate: empty interval");
  QuadratureResult out;
  std::size_t levels = 0;
  try {
    out.value = integrator().integrate(f, a, b, rel_tol, &out.error, &out.l1_norm, &levels);
  } catch (const std::exception& e) {
    fail(ErrorCode::QuadratureFailure, std::string("integrate: ") + e.what());
  }
  check_accuracy(out, a, b, rel_tol, abs_tol);
  return out;
}

QuadratureResult integrate_complement(const std::function<double(double, double)>& f, double a,
                                      double b, double rel_tol, double abs_tol) {
  if (!(b > a)) fail(ErrorCode::InvalidArgument, "integrate: empty interval");
  const double half = 0.5 * (b - a);
  // On [-1, 1] Boost passes zc = 1 - z for z >= 0 and -(1 + z) for z < 0.
  auto g = [&](double z, double zc) {
    const double xc = zc * half;
    return f((z < 0.0 ? a : b) - xc, xc);
  };
  QuadratureResult out;
  std::size_t levels = 0;
  try {
    out.value = integrator().integrate(g, rel_tol, &out.error, &out.l1_norm, &levels);
  } catch (const std::exception& e) {
    fail(ErrorCode::QuadratureFailure, std::string("integrate: ") + e.what());
  }
  out.value *= half;
  out.error *= half;
  out.l1_norm *= half;
  check_accuracy(out, a, b, rel_tol, abs_tol);
  return out;
}

}  // namespace gsvb
