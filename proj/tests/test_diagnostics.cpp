#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "bifluid/errors.hpp"
#include "bifluid/harness.hpp"

using namespace bifluid;

namespace {

constexpr double kPi = std::numbers::pi;

SimState uniform_state(const SimConfig& cfg, double rho, double n) {
  SimState s;
  s.rho = ScalarField(cfg.grid, Boundary::Neumann, rho);
  s.n = ScalarField(cfg.grid, Boundary::Neumann, n);
  s.u_coeffs.assign(static_cast<std::size_t>(cfg.modes * cfg.grid.dim()), 0.0);
  s.magnetic = ScalarField(cfg.grid, Boundary::Dirichlet);
  return s;
}

SimConfig small_config(int cells = 32) {
  SimConfig c;
  c.grid = Grid::line(1.0, cells);
  c.modes = 8;
  c.dt = 2e-3;
  c.t_end = 0.04;
  return c;
}

InitialData smooth_data(const Grid& g, double ratio) {
  InitialData d;
  d.n0 = ScalarField(g, Boundary::Neumann);
  d.rho0 = ScalarField(g, Boundary::Neumann);
  d.m0 = VectorField(g, Boundary::Dirichlet);
  d.magnetic0 = ScalarField(g, Boundary::Dirichlet);
  for (int i = 0; i < g.nodes(0); ++i) {
    const double x = g.coord(0, i);
    d.n0[i] = 1.0 + 0.4 * std::cos(kPi * x);
    d.rho0[i] = ratio > 0 ? ratio * d.n0[i] : 1.0 + 0.3 * std::sin(2 * kPi * x);
    d.m0.comp[0][i] = (d.rho0[i] + d.n0[i]) * 0.5 * std::sin(kPi * x);
    if (i > 0 && i < g.nodes(0) - 1) d.magnetic0[i] = 0.2 * std::sin(kPi * x);
  }
  return d;
}

double fd(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2 * h);
}

}  // namespace

TEST_CASE("ledger of uniform states") {
  const SimConfig cfg = small_config();
  const EnergyLedger a = energy_ledger(uniform_state(cfg, 1, 1), cfg);
  CHECK(a.kinetic == 0.0);
  CHECK(a.magnetic == 0.0);
  CHECK(a.internal == 0.0);
  const EnergyLedger b = energy_ledger(uniform_state(cfg, 2, 2), cfg);
  CHECK(b.internal == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(b.mass_rho == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(b.ratio_min == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(b.div_h_max == 0.0);
}

TEST_CASE("ledger is pure and agrees with direct quadrature") {
  SimConfig cfg = small_config(48);
  cfg.closure.gamma_plus = 3.0;
  cfg.closure.gamma_minus = 1.5;
  cfg.reg.B = std::ceil(cfg.closure.exponent_a()) + 2.0;
  const Simulation sim(cfg);
  SimState s = sim.initial_state(smooth_data(cfg.grid, 0.0));
  sim.advance(s, 0.02);
  const EnergyLedger a = energy_ledger(s, cfg, sim.basis());
  const EnergyLedger b = energy_ledger(s, cfg, sim.basis());
  CHECK(a.energy() == b.energy());
  CHECK(a.dissipation_rate == b.dissipation_rate);
  const double direct = direct_energy(s, cfg, sim.basis());
  CHECK(std::abs(a.energy() - direct) <= 1e-12 * std::max(1.0, direct));
  CHECK(std::abs(internal_energy_real(s, cfg) - a.internal) <= 1e-8 * std::max(1.0, a.internal));
  CHECK(a.kinetic >= 0.0);
  CHECK(a.magnetic >= 0.0);
  CHECK(a.artificial >= 0.0);
}

TEST_CASE("kinetic energy of a single mode") {
  SimConfig cfg = small_config(64);
  SimState s = uniform_state(cfg, 1.0, 0.5);
  s.u_coeffs[0] = 2.0;
  const EnergyLedger l = energy_ledger(s, cfg);
  CHECK(l.kinetic == doctest::Approx(0.5 * 1.5 * 4.0).epsilon(1e-12));
  CHECK(l.dissipation_rate ==
        doctest::Approx((2 * cfg.mu + cfg.lambda) * 4.0 * kPi * kPi).epsilon(1e-12));
}

TEST_CASE("growth constant") {
  std::vector<EnergyLedger> ls(3);
  for (int i = 0; i < 3; ++i) {
    ls[i].time = 0.1 * i;
    ls[i].internal = 1.0 - 0.1 * i;
  }
  CHECK(empirical_growth_constant(ls, 1.0) == 0.0);
  ls[2].internal = 1.5;
  const double c = empirical_growth_constant(ls, 1.0);
  CHECK(c > 0.0);
  // E_delta(t) <= E_delta(0) + C t exp(C t) holds with equality at the worst point.
  const double e0 = ls[0].energy_delta();
  const double t = ls[2].time;
  CHECK(ls[2].energy_delta() == doctest::Approx(e0 + c * t * std::exp(c * t)).epsilon(1e-9));
}

TEST_CASE("cut-off examples") {
  for (double k : {1.0, 4.0, 10.0}) {
    CHECK(cutoff_tk(0.5 * k, k) == doctest::Approx(0.5 * k).epsilon(1e-15));
    CHECK(cutoff_tk(5 * k, k) == doctest::Approx(2 * k).epsilon(1e-15));
    for (double z : {0.1 * k, 0.5 * k, k})
      CHECK(cutoff_lk(z, k) == doctest::Approx(z * std::log(z)).epsilon(1e-12));
  }
}

TEST_CASE("property: T is smooth, concave and monotone") {
  CHECK(cutoff_t(1.0) == doctest::Approx(1.0));
  CHECK(cutoff_t(3.0) == doctest::Approx(2.0));
  CHECK(fd(cutoff_t, 1.0, 1e-6) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::abs(fd(cutoff_t, 3.0, 1e-6)) <= 1e-5);
  const double h = 1e-3;
  for (double z = 0.01; z < 4.0; z += 0.01) {
    CHECK(cutoff_t(z + h) >= cutoff_t(z));
    CHECK(cutoff_t(z + h) - 2 * cutoff_t(z) + cutoff_t(z - h) <= 1e-12);
  }
}

TEST_CASE("property: renormalizing function identities") {
  for (double k : {1.0, 2.5, 8.0}) {
    for (double z = 0.05 * k; z < 5 * k; z += 0.07 * k) {
      const double dz = 1e-5 * z;
      const double db = fd([k](double v) { return cutoff_bk(v, k); }, z, dz);
      CHECK(std::abs(db * z - cutoff_bk(z, k) - cutoff_tk(z, k)) <= 1e-8 * (1 + z));
      CHECK(cutoff_bk_derivative(z, k) == doctest::Approx(db).epsilon(1e-7));
      CHECK(cutoff_tk_derivative(z, k) ==
            doctest::Approx(fd([k](double v) { return cutoff_tk(v, k); }, z, dz)).epsilon(1e-6));
      if (z >= 3 * k)
        CHECK(cutoff_lk(z, k) == doctest::Approx(cutoff_beta(k) * z - 2 * k).epsilon(1e-12));
    }
  }
}

TEST_CASE("defects of identical trajectories vanish") {
  const SimConfig cfg = small_config();
  const Trajectory tr = run_trajectory(cfg, smooth_data(cfg.grid, 0.0), 1.0, 4);
  const DefectReport rep = defect_report({tr, tr, tr}, 2);
  REQUIRE(rep.members.size() == 3);
  for (const auto& m : rep.members) {
    CHECK(m.nlogn_gap == 0.0);
    CHECK(m.osc == 0.0);
    for (double s : m.s_convergence) CHECK(s == 0.0);
    CHECK(m.evf_gap == 0.0);
    CHECK(m.bogovskii_pressure >= 0.0);
    CHECK(m.bogovskii_density >= 0.0);
  }
}

TEST_CASE("proportional data has no s defect") {
  std::vector<Trajectory> seq;
  for (double eps : {1e-2, 5e-3, 2.5e-3}) {
    SimConfig cfg = small_config();
    cfg.epsilon = eps;
    seq.push_back(run_trajectory(cfg, smooth_data(cfg.grid, 2.0), eps, 4));
  }
  const DefectReport rep = defect_report(seq, 2);
  for (const auto& m : rep.members)
    for (double s : m.s_convergence) CHECK(s <= 1e-12);
}

TEST_CASE("defect report exponent fields") {
  const SimConfig cfg = small_config();
  const Trajectory tr = run_trajectory(cfg, smooth_data(cfg.grid, 0.0), 1.0, 2);
  const DefectReport rep = defect_report({tr, tr, tr}, 0);
  const double gm = cfg.closure.gamma_minus;
  CHECK(rep.gamma_bog == doctest::Approx(std::min({1.0, 2.0 * gm / 3.0 - 1.0, gm / 3.0})));
  CHECK(rep.p_values == std::vector<double>{1.0, 2.0});
}

TEST_CASE("defect report rejects mismatched sequences") {
  const SimConfig a = small_config(32);
  const SimConfig b = small_config(40);
  const Trajectory ta = run_trajectory(a, smooth_data(a.grid, 0.0), 1.0, 2);
  const Trajectory tb = run_trajectory(b, smooth_data(b.grid, 0.0), 1.0, 2);
  CHECK_THROWS_AS(defect_report({ta, tb}, 0), DomainError);
  const Trajectory tc = run_trajectory(a, smooth_data(a.grid, 0.0), 1.0, 4);
  CHECK_THROWS_AS(defect_report({ta, tc}, 0), DomainError);
  CHECK_THROWS_AS(defect_report({ta}, 3), DomainError);
}

TEST_CASE("non_increasing") {
  CHECK(non_increasing({3, 2, 2, 1}));
  CHECK(!non_increasing({3, 2, 2.5}));
  CHECK(non_increasing({3, 2, 2.05}, 0.1));
}

TEST_CASE("renormalization residual") {
  SimConfig cfg = small_config(32);
  cfg.epsilon = 0.0;
  const Trajectory tr = run_trajectory(cfg, smooth_data(cfg.grid, 0.0), 0.0, 8);
  const double id = renormalization_residual(tr, identity_renormalizer());
  const double big = renormalization_residual(tr, truncation_renormalizer(100.0));
  CHECK(id == doctest::Approx(big).epsilon(1e-14));
  Trajectory short_tr = tr;
  short_tr.snapshots.resize(2);
  CHECK_THROWS_AS(renormalization_residual(short_tr, identity_renormalizer()), DomainError);
}

TEST_CASE("renormalization residual shrinks under refinement") {
  std::vector<double> res;
  for (int cells : {32, 64, 128}) {
    SimConfig cfg = small_config(cells);
    cfg.dt = 1e-3 * 32.0 / cells;
    const Trajectory tr = run_trajectory(cfg, smooth_data(cfg.grid, 0.0), 0.0, 8);
    res.push_back(std::abs(renormalization_residual(tr, truncation_renormalizer(1.5))));
  }
  for (std::size_t i = 1; i < res.size(); ++i) {
    const double ratio = res[i - 1] / res[i];
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 5.0);
  }
}

TEST_CASE("CSV output") {
  EnergyLedger l;
  l.time = 0.1;
  l.kinetic = 1.0 / 3.0;
  std::ostringstream o;
  write_ledger_csv(o, {l});
  const std::string text = o.str();
  CHECK(text.rfind("time,quantity,value\n", 0) == 0);
  CHECK(text.find("0.10000000000000001,kinetic,0.33333333333333331") != std::string::npos);

  DefectReport rep;
  rep.p_values = {1.0};
  DefectMember m;
  m.parameter = 0.5;
  m.s_convergence = {0.25};
  rep.members = {m};
  std::ostringstream d;
  write_defect_csv(d, rep);
  CHECK(d.str().rfind("sequence_index,functional,value\n", 0) == 0);
  CHECK(d.str().find("0,parameter,0.5") != std::string::npos);
}
