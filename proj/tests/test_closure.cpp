#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "bifluid/closure.hpp"
#include "bifluid/errors.hpp"

using namespace bifluid;

namespace {

ClosureParams params(double gp, double gm, PressureLaw law = PressureLaw::Implicit) {
  ClosureParams p;
  p.gamma_plus = gp;
  p.gamma_minus = gm;
  p.law = law;
  return p;
}

const double kPhi = (1.0 + std::sqrt(5.0)) / 2.0;

// Plain bisection on x^{r-1}(x - rho) - n, bracket grown by doubling.
double bisect_root(double rho, double n, double r) {
  const auto g = [&](double x) { return std::pow(x, r - 1.0) * (x - rho) - n; };
  double lo = rho, hi = rho + 1.0;
  while (g(hi) <= 0.0) hi *= 2.0;
  for (int i = 0; i < 300; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double trapezoid(const std::function<double(double)>& f, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < m; ++i) s += f(a + i * h);
  return s * h;
}

std::vector<std::pair<double, double>> random_points(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1e-3, 10.0);
  std::vector<std::pair<double, double>> out;
  for (int i = 0; i < count; ++i) out.emplace_back(u(rng), u(rng));
  return out;
}

}  // namespace

TEST_CASE("rho_plus examples") {
  CHECK(solve_rho_plus(0.3, 0.7, params(2, 2)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(solve_rho_plus(5.0, 0.0, params(3, 1.5)) == 5.0);
  CHECK(solve_rho_plus(5.0, 0.0, params(1, 1.8)) == 5.0);
  const double oracle = bisect_root(1.0, 1.0, 2.0);
  CHECK(std::abs(oracle - kPhi) < 1e-12);
  CHECK(std::abs(solve_rho_plus(1.0, 1.0, params(3, 1.5)) - oracle) < 1e-12);
}

TEST_CASE("rho_plus boundary branches") {
  CHECK(solve_rho_plus(0.0, 0.0, params(3, 1.5)) == 0.0);
  CHECK(solve_rho_plus(0.0, 4.0, params(3, 1.5)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK_THROWS_AS(solve_rho_plus(-1.0, 1.0, params(2, 2)), DomainError);
  CHECK_THROWS_AS(solve_rho_plus(1.0, std::nan(""), params(2, 2)), DomainError);
}

TEST_CASE("rho_plus agrees with bisection") {
  for (auto [gp, gm] : {std::pair{3.0, 1.5}, {1.0, 1.8}, {2.0, 3.0}, {1.8, 1.8}}) {
    const ClosureParams p = params(gp, gm);
    for (auto [rho, n] : random_points(300, 7)) {
      const double x = solve_rho_plus(rho, n, p);
      CHECK(std::abs(x - bisect_root(rho, n, p.r())) <= 1e-12 * (1.0 + x));
    }
  }
}

TEST_CASE("pressure examples") {
  CHECK(std::abs(pressure(1, 1, params(3, 1.5)) - std::pow(bisect_root(1, 1, 2), 3)) < 1e-9);
  CHECK(pressure(1, 1, params(3, 1.5)) == doctest::Approx(4.2360679775).epsilon(1e-10));
  CHECK(pressure(0, 2, params(7, 2)) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(pressure(1, 1, params(2, 2, PressureLaw::Explicit)) == 2.0);
}

TEST_CASE("evaluate returns consistent variables") {
  const ClosureEval e = evaluate(1.0, 1.0, params(3, 1.5));
  CHECK(e.rho_plus == doctest::Approx(kPhi).epsilon(1e-14));
  CHECK(e.rho_minus == doctest::Approx(kPhi * kPhi).epsilon(1e-14));
  CHECK(e.alpha == doctest::Approx(1.0 / kPhi).epsilon(1e-14));
  CHECK(e.pressure == doctest::Approx(std::pow(kPhi, 3)).epsilon(1e-14));
}

TEST_CASE("partials examples") {
  const PressurePartials eq = pressure_partials(0.4, 2.3, params(2, 2));
  CHECK(eq.drho_rho_plus == doctest::Approx(1.0).epsilon(1e-14));

  const ClosureParams gold = params(3, 1.5);
  const double fd = central_difference([&](double v) { return solve_rho_plus(1.0, v, gold); },
                                       1.0, 1e-5);
  CHECK(std::abs(fd - 1.0 / std::sqrt(5.0)) < 1e-9);
  CHECK(pressure_partials(1, 1, gold).dn_rho_plus == doctest::Approx(fd).epsilon(1e-9));

  CHECK(pressure_partials(5, 0, params(2, 2)).drho_p == doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("partials at the origin") {
  CHECK(pressure_partials(0, 0, params(1, 1)).drho_p == 1.0);
  CHECK(pressure_partials(0, 0, params(2, 2)).drho_p == 0.0);
  CHECK_THROWS_AS(pressure_partials(0, 0, params(2, 1.5)), DomainError);
}

TEST_CASE("partials match finite differences") {
  for (auto [gp, gm] : {std::pair{3.0, 1.5}, {1.0, 1.8}, {2.5, 2.0}}) {
    const ClosureParams p = params(gp, gm);
    for (auto [rho, n] : random_points(100, 11)) {
      if (std::min(rho, n) < 0.05) continue;
      const PressurePartials d = pressure_partials(rho, n, p);
      const double h = 1e-6;
      const double rr = central_difference([&](double v) { return solve_rho_plus(v, n, p); }, rho, h);
      const double np = central_difference([&](double v) { return pressure(rho, v, p); }, n, h);
      const double rp = central_difference([&](double v) { return pressure(v, n, p); }, rho, h);
      CHECK(d.drho_rho_plus == doctest::Approx(rr).epsilon(1e-6));
      CHECK(d.dn_p == doctest::Approx(np).epsilon(1e-6));
      CHECK(d.drho_p == doctest::Approx(rp).epsilon(1e-6));
    }
  }
}

TEST_CASE("H_P examples") {
  CHECK(energy_density_hp(1.0, 3.7, params(3, 1.5)) == 0.0);
  const double oracle =
      2.0 * trapezoid([](double z) { return std::pow(z + z, 2) / (z * z); }, 1.0, 2.0, 4000);
  CHECK(std::abs(oracle - 8.0) < 1e-10);
  CHECK(energy_density_hp(2, 2, params(2, 2)) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(energy_density_hp(1, 1, params(1, 2, PressureLaw::Explicit)) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("H_P against trapezoid quadrature") {
  const ClosureParams p = params(3, 1.5);
  for (auto [rho, n] : {std::pair{2.5, 0.7}, {0.4, 1.2}, {6.0, 6.0}}) {
    const double s = n / rho;
    const auto f = [&](double z) { return pressure(z, z * s, p) / (z * z); };
    const double oracle = rho * trapezoid(f, 1.0, rho, 20000);
    CHECK(energy_density_hp(rho, n, p) == doctest::Approx(oracle).epsilon(1e-7));
  }
}

TEST_CASE("real-variable potential matches") {
  for (auto [gp, gm] : {std::pair{3.0, 1.5}, {2.0, 2.0}, {1.0, 1.8}}) {
    const ClosureParams p = params(gp, gm);
    for (auto [rho, n] : random_points(50, 3)) {
      const RealVariables v = recover_real_variables(rho, n, p);
      const double direct = energy_density_hp(rho, n, p);
      const double real = energy_density_real(v.alpha, v.rho_plus, v.rho_minus, p);
      CHECK(std::abs(direct - real) <= 1e-8 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST_CASE("Euler identity examples") {
  CHECK(euler_identity_residual(2, 2, params(2, 2)) <= 1e-5 * 17);
  CHECK(euler_identity_residual(1, 1, params(3, 1.5)) <= 1e-5 * (1 + std::pow(kPhi, 3)));
  CHECK(euler_identity_residual(1, 0.5, params(1.8, 1.8)) <= 1e-5 * (1 + std::pow(1.5, 1.8)));
}

TEST_CASE("artificial pressure and h_delta") {
  RegularizationParams reg;
  reg.delta = 0.1;
  reg.B = 4;
  CHECK(artificial_pressure(1, 1, params(2, 2), reg) ==
        doctest::Approx(4.0 + 0.1 * (1 + 1 + 0.5 + 0.5)).epsilon(1e-14));
  CHECK(artificial_pressure(0, 0, params(2, 2), reg) == 0.0);

  RegularizationParams ex;
  ex.delta = 0.5;
  ex.beta = 3;
  CHECK(artificial_pressure(1, 1, params(2, 2, PressureLaw::Explicit), ex) ==
        doctest::Approx(6.0).epsilon(1e-14));

  RegularizationParams r3;
  r3.delta = 0.3;
  r3.B = 4;
  CHECK(h_delta(1, 1, r3, params(2, 2)) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(h_delta(0, 0, r3, params(2, 2)) == 0.0);
  RegularizationParams r4;
  r4.delta = 1;
  r4.B = 3;
  CHECK(h_delta(2, 0, r4, params(2, 2)) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("h_delta is the potential of the artificial term") {
  // rho dh/drho + n dh/dn - h equals the artificial part of Pi_delta.
  RegularizationParams reg;
  reg.delta = 0.2;
  reg.B = 5;
  const ClosureParams p = params(2, 2);
  for (auto [rho, n] : random_points(30, 5)) {
    const double h = 1e-6 * (1 + rho + n);
    const double dr = central_difference([&](double v) { return h_delta(v, n, reg, p); }, rho, h);
    const double dn = central_difference([&](double v) { return h_delta(rho, v, reg, p); }, n, h);
    const double lhs = rho * dr + n * dn - h_delta(rho, n, reg, p);
    const double rhs = artificial_pressure(rho, n, p, reg) - pressure(rho, n, p);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
  }
}

TEST_CASE("ratio_s examples") {
  CHECK(ratio_s(3, 6) == 0.5);
  CHECK(ratio_s(1, 0) == 0.0);
  CHECK(ratio_s(0, 4) == 0.0);
}

TEST_CASE("pi decomposition") {
  std::vector<double> grid;
  for (int i = 0; i <= 50; ++i) grid.push_back(0.1 * i);
  CHECK(pi_decomposition(0.0, 0.3, params(2, 2), grid).pi == 0.0);
  CHECK(pi_decomposition(1.0, 1.0, params(2, 2), grid).pi == doctest::Approx(3.5).epsilon(1e-14));
  CHECK(pi_decomposition(1.0, 0.7, params(3, 1.5), grid).monotone_witness >= -1e-10);
}

TEST_CASE("real variables") {
  const RealVariables g = recover_real_variables(1, 1, params(3, 1.5));
  CHECK(g.alpha == doctest::Approx(0.6180339887).epsilon(1e-10));
  CHECK(g.rho_plus == doctest::Approx(kPhi).epsilon(1e-14));
  CHECK(g.rho_minus == doctest::Approx(2.6180339887).epsilon(1e-10));
  CHECK((1.0 - g.alpha) * g.rho_minus == doctest::Approx(1.0).epsilon(1e-14));

  const RealVariables a = recover_real_variables(5, 0, params(3, 1.5));
  CHECK(a.alpha == 1.0);
  CHECK(a.rho_plus == 5.0);
  CHECK(a.rho_minus == doctest::Approx(std::pow(5.0, 2.0)).epsilon(1e-14));

  const RealVariables b = recover_real_variables(0, 2, params(2, 2));
  CHECK(b.alpha == 0.0);
  CHECK(b.rho_minus == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(b.rho_plus == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("Hessian growth constant is finite") {
  const ClosureParams eq = params(2, 2);
  const HessianBoundReport a = hessian_hp_bound_check(1, 1, eq, 0.5);
  CHECK(std::isfinite(a.constant));
  CHECK(a.stable);
  const HessianBoundReport b = hessian_hp_bound_check(2, 2, params(3, 1.5), 1.0);
  CHECK(std::isfinite(b.constant));
  ClosureParams c0 = params(2, 2);
  c0.c0 = 2.0;
  const HessianBoundReport c = hessian_hp_bound_check(2.0, 1.0, c0, 0.5);
  CHECK(std::isfinite(c.constant));
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(params(0.5, 2).validate(), ValidationError);
  CHECK_THROWS_AS(params(2, 0).validate(), ValidationError);
  ClosureParams p = params(2, 2);
  p.c0 = 0.5;
  CHECK_THROWS_AS(p.validate(), ValidationError);
  RegularizationParams reg;
  reg.B = params(3, 1.5).exponent_a() + 1.0;
  CHECK_THROWS_AS(reg.validate(params(3, 1.5)), ValidationError);
}

TEST_CASE("property: bracket and bounds hold on random samples") {
  for (auto [gp, gm] : {std::pair{2.0, 2.0}, {3.0, 1.5}, {1.0, 1.8}, {4.0, 1.2}}) {
    const ClosureParams p = params(gp, gm);
    for (auto [rho, n] : random_points(500, 13)) {
      const bounds::Slacks s = bounds::evaluate_slacks(rho, n, p);
      for (double v : {s.bracket_lower, s.bracket_upper, s.drho_rho_plus_lower,
                       s.drho_rho_plus_upper, s.pressure_lower, s.pressure_upper,
                       s.dn_rho_plus_lower, s.dn_rho_plus_upper, s.drho_p_lower, s.drho_p_upper,
                       s.dn_p_lower, s.dn_p_upper, s.dnn_p_upper})
        CHECK(v >= -1e-10);
    }
  }
}

TEST_CASE("property: pressure is symmetric under species exchange") {
  for (auto [gp, gm] : {std::pair{3.0, 1.5}, {1.2, 2.4}}) {
    const ClosureParams p = params(gp, gm);
    const ClosureParams q = params(gm, gp);
    for (auto [rho, n] : random_points(200, 17))
      CHECK(std::abs(pressure(rho, n, p) - pressure(n, rho, q)) <= 1e-12 * (1 + pressure(rho, n, p)));
  }
}

TEST_CASE("property: pressure is increasing in each density") {
  const ClosureParams p = params(3, 1.5);
  for (auto [rho, n] : random_points(200, 19)) {
    CHECK(pressure(rho * 1.01, n, p) > pressure(rho, n, p));
    CHECK(pressure(rho, n * 1.01, p) > pressure(rho, n, p));
  }
}

TEST_CASE("property: H_P is convex along rays from the origin") {
  const ClosureParams p = params(3, 1.5);
  for (double s : {0.3, 1.0, 2.5}) {
    double prev = energy_density_hp(0.5, 0.5 * s, p);
    double prev_slope = -1e300;
    for (int i = 1; i <= 40; ++i) {
      const double rho = 0.5 + 0.1 * i;
      const double cur = energy_density_hp(rho, rho * s, p);
      const double slope = (cur - prev) / 0.1;
      CHECK(slope >= prev_slope - 1e-9);
      prev_slope = slope;
      prev = cur;
    }
  }
}
