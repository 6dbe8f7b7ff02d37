#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bifluid/errors.hpp"
#include "bifluid/io.hpp"

using namespace bifluid;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

int parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "bifluid_test_io";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("empty config gives defaults") {
  const RunConfig c = parse("# nothing\n\n");
  CHECK(c.sim.closure.gamma_plus == 2.0);
  CHECK(c.sim.grid.dim() == 1);
  CHECK(c.sim.grid.cells(0) == 128);
  CHECK(c.profile == "cosine-bump");
  CHECK(!c.c0_given);
  // B defaults to ceil(A) + 2.
  CHECK(c.sim.reg.B == std::ceil(c.sim.closure.exponent_a()) + 2.0);
}

TEST_CASE("typed entries") {
  const RunConfig c = parse(
      "gamma_plus: real = 3\n"
      "gamma_minus: real = 1.5  \n"
      "dim: int = 2\n"
      "cells: int = 16\n"
      "cells_y: int = 24\n"
      "length_y: real = 2\n"
      "modes: int = 6\n"
      "profile: string = proportional-pair\n"
      "sweep_axis: string = delta\n"
      "sweep_values: reals = 1e-1, 1e-2, 1e-3\n"
      "case: string = diffusion\n");
  CHECK(c.sim.closure.gamma_plus == 3.0);
  CHECK(c.sim.grid.dim() == 2);
  CHECK(c.sim.grid.cells(1) == 24);
  CHECK(c.sim.grid.extent(1) == 2.0);
  CHECK(c.profile == "proportional-pair");
  CHECK(c.sweep_axis == SweepAxis::Delta);
  CHECK(c.sweep_values == std::vector<double>{1e-1, 1e-2, 1e-3});
  CHECK(c.verify_case == "diffusion");
}

TEST_CASE("invalid physical parameters are named") {
  try {
    parse("lambda: real = -1\n");
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("2μ+3λ ≥ 0") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("gamma_plus: real = 0.5\n"), ValidationError);
  CHECK_THROWS_AS(parse("snapshots: int = 1\n"), ValidationError);
  CHECK_THROWS_AS(parse("dim: int = 3\n"), ValidationError);
}

TEST_CASE("parse errors carry the line number") {
  CHECK(parse_error_line("mu: real = 1\n\nmu: real = abc\n") == 3);
  CHECK(parse_error_line("# c\nviscosity: real = 1\n") == 2);
  CHECK(parse_error_line("mu: int = 1\n") == 1);
  CHECK(parse_error_line("mu real 1\n") == 1);
  CHECK(parse_error_line("mu: real = 1\nmu: real = 2\n") == 2);
  CHECK(parse_error_line("law: string = ideal\n") == 1);
  CHECK(parse_error_line("audit_pairs: reals = 2, 2, 3\n") == 1);
  CHECK_THROWS_AS(load_config("/nonexistent/config.cfg"), ParseError);
}

TEST_CASE("canonical form round-trips and hashes") {
  const RunConfig a = parse("gamma_plus: real = 2.5\nc0: real = 3\nmodes: int = 12\n");
  const std::string text = canonical_config(a);
  const RunConfig b = parse(text);
  CHECK(canonical_config(b) == text);
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  const RunConfig c = parse("gamma_plus: real = 2.5\nc0: real = 3\nmodes: int = 13\n");
  CHECK(config_hash(a) != config_hash(c));
  // Published FNV-1a test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("default c0 comes from the data") {
  RunConfig c = parse("amplitude: real = 0.4\n");
  prepare_initial_data(c);
  // rho = 1 + 0.4 cos, n = 1 - 0.2 cos: the worst ratio 1.2 / 0.6 sits at x = L.
  CHECK(c.sim.closure.c0 == doctest::Approx(2.0).epsilon(1e-12));
  RunConfig u = parse("profile: string = uniform\n");
  prepare_initial_data(u);
  CHECK(u.sim.closure.c0 == 1.0);
  RunConfig given = parse("c0: real = 5\n");
  prepare_initial_data(given);
  CHECK(given.sim.closure.c0 == 5.0);
}

TEST_CASE("initial data profiles") {
  const RunConfig c = parse("profile: string = proportional-pair\nratio: real = 3\ncells: int = 16\nmodes: int = 8\n");
  const InitialData d = make_initial_data(c, c.sim);
  for (std::size_t i = 0; i < d.n0.values.size(); ++i) CHECK(d.rho0[i] == doctest::Approx(3 * d.n0[i]));
  CHECK(d.m0.comp[0].front() == 0.0);
  CHECK(d.m0.comp[0].back() == 0.0);
  const RunConfig v = parse("profile: string = vacuum-region\ncells: int = 16\nmodes: int = 8\n");
  const InitialData dv = make_initial_data(v, v.sim);
  CHECK(dv.rho0[0] == 0.0);
  CHECK(dv.rho0[4] == 0.0);
  CHECK(dv.rho0[16] == doctest::Approx(1.4));
}

TEST_CASE("checkpoint round trip is bit exact") {
  SimState s;
  const Grid g = Grid::box(1.0, 1.0, 8, 8);
  s.time = 0.1 + 1e-17;
  s.steps = 42;
  s.rho = ScalarField(g, Boundary::Neumann, 1.0 / 3.0);
  s.n = ScalarField(g, Boundary::Neumann, 2.0 / 7.0);
  s.magnetic = ScalarField(g, Boundary::Dirichlet);
  s.magnetic[10] = -1e-300;
  s.u_coeffs = {1.0 / 9.0, -2.5, 3e-200};
  s.dissipation_integral = 0.7;
  s.eps_weighted_integral = 1e-5;
  s.mass_matrix_regularized = true;

  const fs::path p = scratch("state.ckpt");
  save_checkpoint(p, s);
  CHECK(!fs::exists(fs::path(p).concat(".tmp")));
  const SimState r = load_checkpoint(p);
  CHECK(r.time == s.time);
  CHECK(r.steps == 42);
  CHECK(r.rho.values == s.rho.values);
  CHECK(r.n.values == s.n.values);
  CHECK(r.magnetic.values == s.magnetic.values);
  CHECK(r.rho.grid == g);
  CHECK(r.u_coeffs == s.u_coeffs);
  CHECK(r.dissipation_integral == s.dissipation_integral);
  CHECK(r.eps_weighted_integral == s.eps_weighted_integral);
  CHECK(r.mass_matrix_regularized);

  std::stringstream cut;
  write_checkpoint(cut, s);
  std::string bytes = cut.str();
  bytes.resize(bytes.size() - 20);
  std::istringstream truncated(bytes);
  CHECK_THROWS_AS(read_checkpoint(truncated), ParseError);
  std::istringstream garbage("not a checkpoint\n");
  CHECK_THROWS(read_checkpoint(garbage));
}

TEST_CASE("atomic write replaces content") {
  const fs::path p = scratch("atomic.txt");
  write_file_atomic(p, "first");
  write_file_atomic(p, "second");
  std::ifstream in(p);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(text == "second");
}

TEST_CASE("CSV emitters") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(2.0) == "2");
  CHECK(invariants_csv({{"mass_rho", true, 1e-16}}) ==
        "invariant,passed,worst\nmass_rho,1,9.9999999999999998e-17\n");

  ConvergenceTable t;
  t.case_id = "diffusion";
  t.fields = {"rho"};
  t.rows = {{16, 0.5, {0.25}, 0.25}};
  t.orders = {2.0};
  CHECK(convergence_csv(t) ==
        "case,cells,dt,field,error\n"
        "diffusion,16,0.5,rho,0.25\n"
        "diffusion,16,0.5,total,0.25\n"
        "diffusion,order_0,,,2\n");

  AuditReport a;
  a.params.gamma_plus = 3.0;
  a.params.gamma_minus = 1.5;
  a.rows = {{"bracket_lower", 0.125, 10}};
  CHECK(audit_csv({a}) ==
        "gamma_plus,gamma_minus,check,worst_slack,count\n3,1.5,bracket_lower,0.125,10\n");
}

TEST_CASE("manifest lists outputs") {
  const fs::path dir = scratch("manifest_run");
  fs::create_directories(dir);
  const RunConfig c = parse("");
  write_manifest(dir, c, "simulate", {"ledger.csv"});
  std::ifstream in(dir / "manifest.json");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(text.find(config_hash(c)) != std::string::npos);
  CHECK(text.find("ledger.csv") != std::string::npos);
}
