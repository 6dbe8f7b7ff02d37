#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

namespace bifluid::numerics {

/// Default finite-difference step at x: 1e-5 (1+|x|), kept inside (0, x/4]
/// when `positive_domain` so the stencil never leaves the half-line.
inline double fd_step(double x, bool positive_domain, double base = 1e-3) {
  double h = base * (1.0 + std::abs(x));
  if (positive_domain && x > 0.0) h = std::min(h, 0.25 * x);
  return h;
}

/// Central difference refined once by Richardson extrapolation (O(h^4)).
template <class F>
double richardson_derivative(F&& f, double x, double h) {
  const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
  const double h2 = 0.5 * h;
  const double d2 = (f(x + h2) - f(x - h2)) / (2.0 * h2);
  return (4.0 * d2 - d1) / 3.0;
}

/// Adaptive Gauss-Kronrod (15/31) integral of f over [a, b].
/// Throws NumericError when the error estimate exceeds rel_tol * L1 norm.
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol = 1e-12);

/// max(1, 2^(p-1)): smallest K with (a+b)^p <= K (a^p + b^p) for a, b > 0.
inline double power_split_constant(double p) {
  return std::max(1.0, std::pow(2.0, p - 1.0));
}

}  // namespace bifluid::numerics
