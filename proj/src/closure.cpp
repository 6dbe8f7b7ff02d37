#include "bifluid/closure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bifluid/errors.hpp"
#include "bifluid/numerics.hpp"

namespace bifluid {

namespace numerics {

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double rel_tol) {
  if (a == b) return 0.0;
  double error = 0.0;
  double l1 = 0.0;
  // Affine map onto [0, 1].
  const double len = b - a;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double t) { return f(a + len * t) * len; }, 0.0, 1.0, 15, rel_tol, &error, &l1);
  if (!std::isfinite(value) || error > std::max(1e-10 * l1, 1e-300)) {
    std::ostringstream msg;
    msg << "quadrature on [" << a << ", " << b << "] did not converge (error "
        << error << ", L1 " << l1 << ")";
    throw NumericError(msg.str());
  }
  return value;
}

}  // namespace numerics

namespace {

constexpr int kMaxIterations = 200;
constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_density(double value, const char* name) {
  if (!std::isfinite(value) || value < 0.0) {
    std::ostringstream msg;
    msg << name << " must be finite and non-negative, got " << value;
    throw DomainError(msg.str());
  }
}

// max{q_lower^p, q_upper^p}: bounds x^p by (rho + n^{1/r})^p on the bracket.
double bracket_power(const ClosureParams& p, double exponent) {
  return std::max(std::pow(p.q_lower(), exponent), std::pow(p.q_upper(), exponent));
}

double g_energy(double z, double gamma) {
  if (gamma == 1.0) return (z > 0.0 ? z * std::log(z) : 0.0) - z + 1.0;
  return std::pow(z, gamma) / (gamma - 1.0);
}

// a^2 b^{B-2}, with the convention 0 when b = 0 and B < 2.
double mixed_term(double a, double b, double big_b) {
  if (b == 0.0 && big_b < 2.0) return 0.0;
  return a * a * std::pow(b, big_b - 2.0);
}

double artificial_sum(double rho, double n, double big_b) {
  return std::pow(rho, big_b) + std::pow(n, big_b) + 0.5 * mixed_term(rho, n, big_b) +
         0.5 * mixed_term(n, rho, big_b);
}

}  // namespace

void ClosureParams::validate() const {
  if (!(gamma_plus >= 1.0) || !std::isfinite(gamma_plus))
    throw ValidationError("closure requires gamma_plus >= 1");
  if (!(gamma_minus > 0.0) || !std::isfinite(gamma_minus))
    throw ValidationError("closure requires gamma_minus > 0");
  if (!(c0 >= 1.0) || !std::isfinite(c0))
    throw ValidationError("ratio bound requires c0 >= 1");
}

double ClosureParams::q_lower() const { return std::min(1.0, gamma_minus / gamma_plus); }
double ClosureParams::q_upper() const { return std::max(1.0, gamma_minus / gamma_plus); }
double ClosureParams::q1_lower() const { return std::min(1.0, gamma_plus / gamma_minus); }
double ClosureParams::q1_upper() const { return std::max(1.0, gamma_plus / gamma_minus); }
double ClosureParams::c_lower() const { return std::pow(q_lower(), gamma_plus); }
double ClosureParams::c_upper() const { return std::pow(2.0 * q_upper(), gamma_plus); }

double ClosureParams::exponent_a() const {
  const double gp = gamma_plus;
  const double gm = gamma_minus;
  return std::max({0.0, gp - 2.0, gm - 2.0, gp - 2.0 * gp / gm, gp - gp / gm - 1.0,
                   gm - gm / gp - 1.0});
}

void RegularizationParams::validate(const ClosureParams& closure) const {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ValidationError("artificial pressure requires delta > 0");
  if (!(B >= closure.exponent_a() + 2.0)) {
    std::ostringstream msg;
    msg << "artificial pressure requires B >= A+2 (A = " << closure.exponent_a()
        << ", B = " << B << ")";
    throw ValidationError(msg.str());
  }
}

double solve_rho_plus(double rho, double n, const ClosureParams& params) {
  check_density(rho, "rho");
  check_density(n, "n");
  const double r = params.r();
  if (n == 0.0) return rho;
  const double m = std::pow(n, 1.0 / r);
  if (rho == 0.0) return m;

  double lo = std::max(rho, params.q_lower() * (rho + m));
  double hi = params.q_upper() * (rho + m);
  if (hi < lo) hi = lo;

  // g(x) = x^{r-1} (x - rho) - n is increasing on [rho, inf).
  auto g = [&](double x) { return std::pow(x, r - 1.0) * (x - rho) - n; };
  auto dg = [&](double x) {
    return std::pow(x, r - 2.0) * (r * x - (r - 1.0) * rho);
  };

  double x = std::clamp(rho + m, lo, hi);
  for (int it = 0; it < kMaxIterations; ++it) {
    const double gx = g(x);
    if (gx == 0.0) return x;
    if (gx > 0.0)
      hi = x;
    else
      lo = x;
    const double slope = dg(x);
    double next = x - gx / slope;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= 2.0 * kEps * x || hi - lo <= 4.0 * kEps * x) return x;
  }
  std::ostringstream msg;
  msg << "closure root did not converge for rho=" << rho << ", n=" << n;
  throw NumericError(msg.str(), hi - lo);
}

ClosureEval evaluate(double rho, double n, const ClosureParams& params) {
  ClosureEval out;
  out.rho = rho;
  out.n = n;
  out.rho_plus = solve_rho_plus(rho, n, params);
  out.rho_minus = std::pow(out.rho_plus, params.r());
  out.alpha = out.rho_plus > 0.0 ? rho / out.rho_plus : 1.0;
  out.pressure = pressure(rho, n, params);
  return out;
}

double pressure(double rho, double n, const ClosureParams& params) {
  if (params.law == PressureLaw::Explicit) {
    check_density(rho, "rho");
    check_density(n, "n");
    return std::pow(rho, params.gamma_plus) + std::pow(n, params.gamma_minus);
  }
  if (rho == 0.0 && n > 0.0) {
    check_density(n, "n");
    return std::pow(n, params.gamma_minus);
  }
  return std::pow(solve_rho_plus(rho, n, params), params.gamma_plus);
}

PressurePartials pressure_partials(double rho, double n, const ClosureParams& params) {
  check_density(rho, "rho");
  check_density(n, "n");
  const double gp = params.gamma_plus;
  const double gm = params.gamma_minus;
  const double r = params.r();
  PressurePartials out;

  if (rho == 0.0 && n == 0.0) {
    if (gm / gp < 1.0)
      throw DomainError("d_n rho_+ is unbounded at the origin when gamma-/gamma+ < 1");
    if (gm < 1.0) throw DomainError("d_n P is unbounded at the origin when gamma- < 1");
    out.drho_rho_plus = 1.0;
    out.drho_p = gp == 1.0 ? 1.0 : 0.0;
    out.dn_rho_plus = gm / gp == 1.0 ? 1.0 : 0.0;
    out.dn_p = gm == 1.0 ? 1.0 : 0.0;
    if (gm > 2.0 || gm == 1.0)
      out.dnn_p = 0.0;
    else if (gm == 2.0)
      out.dnn_p = 2.0;
    else
      out.dnn_p = std::numeric_limits<double>::infinity();
    if (params.law == PressureLaw::Explicit) out.drho_p = gp == 1.0 ? 1.0 : 0.0;
    return out;
  }

  const double x = solve_rho_plus(rho, n, params);
  const double alpha = std::clamp(rho / x, 0.0, 1.0);
  const double d = alpha + r * (1.0 - alpha);
  const double g1 = std::pow(x, r - 1.0) * d;
  const double g2 = (r - 1.0) * std::pow(x, r - 2.0) * (r - (r - 2.0) * alpha);

  out.drho_rho_plus = 1.0 / d;
  out.dn_rho_plus = 1.0 / g1;
  const double dnn_rho_plus = -g2 / (g1 * g1 * g1);

  if (n == 0.0) {
    // Boundary values along the rho axis.
    out.drho_rho_plus = 1.0;
    out.dn_rho_plus = std::pow(rho, 1.0 - r);
  } else if (rho == 0.0) {
    out.drho_rho_plus = gm / gp;
    out.dn_rho_plus = gm / gp * std::pow(n, gm / gp - 1.0);
  }

  if (params.law == PressureLaw::Explicit) {
    out.drho_p = gp * std::pow(rho, gp - 1.0);
    out.dn_p = gm * std::pow(n, gm - 1.0);
    out.dnn_p = gm * (gm - 1.0) * std::pow(n, gm - 2.0);
    return out;
  }

  const double p1 = gp * std::pow(x, gp - 1.0);
  const double p2 = gp * (gp - 1.0) * std::pow(x, gp - 2.0);
  out.drho_p = p1 * out.drho_rho_plus;
  out.dn_p = p1 * out.dn_rho_plus;
  if (n == 0.0) {
    out.drho_p = gp * std::pow(rho, gp - 1.0);
    out.dn_p = gp * std::pow(rho, gp - r);
  } else if (rho == 0.0) {
    out.drho_p = gm * std::pow(n, gm - gm / gp);
    out.dn_p = gm * std::pow(n, gm - 1.0);
  }
  out.dnn_p = p2 * out.dn_rho_plus * out.dn_rho_plus + p1 * dnn_rho_plus;
  return out;
}

double energy_density_hp(double rho, double n, const ClosureParams& params) {
  check_density(rho, "rho");
  check_density(n, "n");
  if (params.law == PressureLaw::Explicit)
    return g_energy(rho, params.gamma_plus) + g_energy(n, params.gamma_minus);
  if (rho == 0.0) {
    if (n == 0.0) return 0.0;
    throw DomainError("H_P is unbounded on {rho = 0, n > 0}");
  }
  if (rho == 1.0) return 0.0;
  const double s = n / rho;
  if (params.gamma_plus == params.gamma_minus) {
    // P(z, z s) = z^g (1 + s)^g integrates in closed form.
    const double g = params.gamma_plus;
    const double lr = std::log(rho);
    const double scale = rho * std::pow(1.0 + s, g);
    return g == 1.0 ? scale * lr : scale * std::expm1((g - 1.0) * lr) / (g - 1.0);
  }
  auto integrand = [&](double z) { return pressure(z, z * s, params) / (z * z); };
  const double a = std::min(1.0, rho);
  const double b = std::max(1.0, rho);
  const double sign = rho >= 1.0 ? 1.0 : -1.0;
  return rho * sign * numerics::integrate_adaptive(integrand, a, b);
}

double energy_density_real(double alpha, double rho_plus, double rho_minus,
                           const ClosureParams& params) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw DomainError("volume fraction must lie in [0, 1]");
  check_density(rho_plus, "rho_plus");
  check_density(rho_minus, "rho_minus");
  const double rho = alpha * rho_plus;
  if (rho == 0.0) {
    if ((1.0 - alpha) * rho_minus == 0.0) return 0.0;
    throw DomainError("H_P is unbounded on {rho = 0, n > 0}");
  }
  if (params.law == PressureLaw::Explicit)
    return energy_density_hp(rho, (1.0 - alpha) * rho_minus, params);
  if (rho == 1.0) return 0.0;
  const double s = (1.0 - alpha) * rho_minus / rho;
  auto integrand = [&](double z) {
    return std::pow(solve_rho_plus(z, z * s, params), params.gamma_plus) / (z * z);
  };
  const double a = std::min(1.0, rho);
  const double b = std::max(1.0, rho);
  const double sign = rho >= 1.0 ? 1.0 : -1.0;
  return rho * sign * numerics::integrate_adaptive(integrand, a, b);
}

double euler_identity_residual(double rho, double n, const ClosureParams& params) {
  if (!(rho > 0.0) || !(n > 0.0))
    throw DomainError("Euler identity check requires rho, n > 0");
  auto h_rho = [&](double v) { return energy_density_hp(v, n, params); };
  auto h_n = [&](double v) { return energy_density_hp(rho, v, params); };
  // Steps relative to the point.
  const double d_rho = numerics::richardson_derivative(h_rho, rho, 1e-3 * rho);
  const double d_n = numerics::richardson_derivative(h_n, n, 1e-3 * n);
  const double h = energy_density_hp(rho, n, params);
  return std::abs(rho * d_rho + n * d_n - h - pressure(rho, n, params));
}

double artificial_pressure(double rho, double n, const ClosureParams& params,
                           const RegularizationParams& reg) {
  check_density(rho, "rho");
  check_density(n, "n");
  const double p = pressure(rho, n, params);
  if (params.law == PressureLaw::Explicit)
    return p + reg.delta * std::pow(rho + n, reg.beta);
  return p + reg.delta * artificial_sum(rho, n, reg.B);
}

double h_delta(double rho, double n, const RegularizationParams& reg,
               const ClosureParams& params) {
  check_density(rho, "rho");
  check_density(n, "n");
  if (params.law == PressureLaw::Explicit) {
    if (!(reg.beta > 1.0)) throw DomainError("h_delta requires beta > 1");
    return reg.delta / (reg.beta - 1.0) * std::pow(rho + n, reg.beta);
  }
  if (!(reg.B > 1.0)) throw DomainError("h_delta requires B > 1");
  return reg.delta / (reg.B - 1.0) * artificial_sum(rho, n, reg.B);
}

double total_energy_density(double rho, double n, const ClosureParams& params,
                            const RegularizationParams& reg) {
  return energy_density_hp(rho, n, params) + h_delta(rho, n, reg, params);
}

double ratio_s(double rho, double n) { return n > 0.0 ? rho / n : 0.0; }

PiDecomposition pi_decomposition(double n, double s, const ClosureParams& params,
                                 std::span<const double> n_grid) {
  const double half_q1 = 0.5 * params.q1_lower();
  auto pi_at = [&](double v) {
    return pressure(v * s, v, params) - half_q1 * std::pow(v, params.gamma_minus);
  };
  PiDecomposition out;
  out.pi = pi_at(n);
  out.monotone_witness = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    out.monotone_witness =
        std::min(out.monotone_witness, pi_at(n_grid[i]) - pi_at(n_grid[i - 1]));
  if (n_grid.size() < 2) out.monotone_witness = 0.0;
  return out;
}

RealVariables recover_real_variables(double rho, double n, const ClosureParams& params) {
  RealVariables out;
  if (rho == 0.0 && n == 0.0) {
    check_density(rho, "rho");
    out.degenerate = true;
    return out;
  }
  out.rho_plus = solve_rho_plus(rho, n, params);
  out.rho_minus = std::pow(out.rho_plus, params.r());
  if (n == 0.0)
    out.alpha = 1.0;
  else if (rho == 0.0)
    out.alpha = 0.0;
  else
    out.alpha = std::clamp(rho / out.rho_plus, 0.0, 1.0);
  return out;
}

bool in_ratio_set(double rho, double n, double c0, double slack) {
  return n >= 0.0 && n <= c0 * rho + slack && rho <= c0 * n + slack;
}

HessianBoundReport hessian_hp_bound_check(double rho, double n,
                                          const ClosureParams& params,
                                          double r_lower) {
  if (!(r_lower > 0.0) || rho < r_lower)
    throw DomainError("Hessian bound requires rho >= r_lower > 0");
  if (!in_ratio_set(rho, n, params.c0, 1e-12 * (1.0 + rho + n)))
    throw DomainError("Hessian bound requires (rho, n) in the ratio set");

  auto hessian_sum = [&](double scale, HessianBoundReport* parts) {
    const double hr = numerics::fd_step(rho, true, 1e-3 * scale);
    const double hn = numerics::fd_step(n, true, 1e-3 * scale);
    if (hr <= 1e3 * kEps * rho || hn <= 1e3 * kEps * n)
      throw NumericError("finite-difference step underflow in Hessian bound");
    auto f = [&](double a, double b) { return energy_density_hp(a, b, params); };
    const double f0 = f(rho, n);
    const double rr = (f(rho + hr, n) - 2.0 * f0 + f(rho - hr, n)) / (hr * hr);
    const double nn = (f(rho, n + hn) - 2.0 * f0 + f(rho, n - hn)) / (hn * hn);
    const double rn = (f(rho + hr, n + hn) - f(rho + hr, n - hn) - f(rho - hr, n + hn) +
                       f(rho - hr, n - hn)) /
                      (4.0 * hr * hn);
    if (parts) {
      parts->h_rr = rr;
      parts->h_rn = rn;
      parts->h_nn = nn;
    }
    return std::abs(rr) + std::abs(rn) + std::abs(nn);
  };

  HessianBoundReport out;
  const double weight = 1.0 + std::pow(rho, params.exponent_a());
  out.constant = hessian_sum(1.0, &out) / weight;
  out.constant_refined = hessian_sum(0.5, nullptr) / weight;
  const double hi = std::max(out.constant, out.constant_refined);
  const double lo = std::min(out.constant, out.constant_refined);
  out.stable = std::isfinite(hi) && (hi == 0.0 || lo * 2.0 >= hi);
  return out;
}

namespace bounds {

double rho_plus_n_constant(const ClosureParams& p) {
  const double e = 1.0 - p.r();
  return bracket_power(p, e) * numerics::power_split_constant(e) / p.q1_lower();
}

double drho_p_constant(const ClosureParams& p) {
  const double e = p.gamma_plus - 1.0;
  return p.gamma_plus * p.q_upper() * bracket_power(p, e) *
         numerics::power_split_constant(e);
}

double dn_p_constant(const ClosureParams& p) {
  const double e = p.gamma_plus - p.r();
  return p.gamma_plus / p.q1_lower() * bracket_power(p, e) *
         numerics::power_split_constant(e);
}

double dnn_p_constant(const ClosureParams& p) {
  const double gp = p.gamma_plus;
  const double r = p.r();
  const double q1 = p.q1_lower();
  const double e = gp - 2.0 * r;
  const double c0 = gp * std::abs(gp - 1.0) / (q1 * q1) +
                    gp * std::abs(r - 1.0) * std::max(r, 2.0) / (q1 * q1 * q1);
  return c0 * bracket_power(p, e) * numerics::power_split_constant(e);
}

namespace {
double upper_slack(double bound, double value) {
  return (bound - value) / std::max(1.0, std::abs(bound));
}
double lower_slack(double bound, double value) {
  return (value - bound) / std::max(1.0, std::abs(bound));
}
}  // namespace

Slacks evaluate_slacks(double rho, double n, const ClosureParams& params) {
  if (!(rho > 0.0) || !(n > 0.0)) throw DomainError("bound slacks require rho, n > 0");
  if (params.law != PressureLaw::Implicit)
    throw DomainError("bound slacks apply to the implicit closure");
  const double gp = params.gamma_plus;
  const double gm = params.gamma_minus;
  const double r = params.r();
  const double m = std::pow(n, 1.0 / r);
  const double x = solve_rho_plus(rho, n, params);
  const double p = std::pow(x, gp);
  const PressurePartials d = pressure_partials(rho, n, params);

  Slacks s;
  s.bracket_lower = lower_slack(std::max(rho, params.q_lower() * (rho + m)), x);
  s.bracket_upper = upper_slack(params.q_upper() * (rho + m), x);
  s.drho_rho_plus_lower = lower_slack(params.q_lower(), d.drho_rho_plus);
  s.drho_rho_plus_upper = upper_slack(params.q_upper(), d.drho_rho_plus);
  const double power_sum = std::pow(rho, gp) + std::pow(n, gm);
  s.pressure_lower = lower_slack(params.c_lower() * power_sum, p);
  s.pressure_upper = upper_slack(params.c_upper() * power_sum, p);
  s.dn_rho_plus_lower = lower_slack(0.0, d.dn_rho_plus);
  s.dn_rho_plus_upper = upper_slack(
      rho_plus_n_constant(params) * (std::pow(rho, 1.0 - r) + std::pow(n, 1.0 / r - 1.0)),
      d.dn_rho_plus);
  s.drho_p_lower = lower_slack(0.0, d.drho_p);
  s.drho_p_upper = upper_slack(
      drho_p_constant(params) * (std::pow(rho, gp - 1.0) + std::pow(n, gm - gm / gp)),
      d.drho_p);
  s.dn_p_lower = lower_slack(0.0, d.dn_p);
  s.dn_p_upper = upper_slack(
      dn_p_constant(params) * (std::pow(rho, gp - r) + std::pow(n, gm - 1.0)), d.dn_p);
  s.dnn_p_upper = upper_slack(
      dnn_p_constant(params) * (std::pow(rho, gp - 2.0 * r) + std::pow(n, gm - 2.0)),
      std::abs(d.dnn_p));
  return s;
}

}  // namespace bounds

}  // namespace bifluid
