#include "bifluid/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "bifluid/errors.hpp"

namespace bifluid {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(const std::string& text, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (trim(text.substr(used)).empty() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("key '" + key + "': '" + text + "' is not a real number", line);
}

long parse_int(const std::string& text, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const long v = std::stol(text, &used);
    if (trim(text.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("key '" + key + "': '" + text + "' is not an integer", line);
}

std::vector<double> parse_reals(const std::string& text, int line, const std::string& key) {
  std::vector<double> out;
  std::string item;
  std::string normalized = text;
  std::replace(normalized.begin(), normalized.end(), ',', ' ');
  std::istringstream is(normalized);
  while (is >> item) out.push_back(parse_real(item, line, key));
  if (out.empty()) throw ParseError("key '" + key + "': empty list", line);
  return out;
}

struct Entry {
  std::string type;
  std::function<void(RunConfig&, const std::string&, int, const std::string&)> set;
};

const std::map<std::string, Entry>& entries() {
  auto real = [](double RunConfig::*field) {
    return Entry{"real", [field](RunConfig& c, const std::string& v, int l, const std::string& k) {
                   c.*field = parse_real(v, l, k);
                 }};
  };
  auto sim_real = [](double SimConfig::*field) {
    return Entry{"real", [field](RunConfig& c, const std::string& v, int l, const std::string& k) {
                   c.sim.*field = parse_real(v, l, k);
                 }};
  };
  static const std::map<std::string, Entry> table = {
      {"gamma_plus", {"real", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
                        c.sim.closure.gamma_plus = parse_real(v, l, k);
                      }}},
      {"gamma_minus", {"real", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
                         c.sim.closure.gamma_minus = parse_real(v, l, k);
                       }}},
      {"law", {"string", [](RunConfig& c, const std::string& v, int l, const std::string&) {
                 if (v == "implicit")
                   c.sim.closure.law = PressureLaw::Implicit;
                 else if (v == "explicit")
                   c.sim.closure.law = PressureLaw::Explicit;
                 else
                   throw ParseError("key 'law': expected implicit or explicit", l);
               }}},
      {"c0", {"real", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
                c.sim.closure.c0 = parse_real(v, l, k);
                c.c0_given = true;
              }}},
      {"delta", {"real", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
                   c.sim.reg.delta = parse_real(v, l, k);
                 }}},
      {"B", {"real", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
               c.sim.reg.B = parse_real(v, l, k);
               c.b_given = true;
             }}},
      {"beta", {"real", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
                  c.sim.reg.beta = parse_real(v, l, k);
                }}},
      {"epsilon", sim_real(&SimConfig::epsilon)},
      {"mu", sim_real(&SimConfig::mu)},
      {"lambda", sim_real(&SimConfig::lambda)},
      {"nu", sim_real(&SimConfig::nu)},
      {"dt", sim_real(&SimConfig::dt)},
      {"t_end", sim_real(&SimConfig::t_end)},
      {"sigma", sim_real(&SimConfig::sigma)},
      {"modes", {"int", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
                   c.sim.modes = static_cast<int>(parse_int(v, l, k));
                 }}},
      {"dim", {"int", [](RunConfig&, const std::string&, int, const std::string&) {}}},
      {"cells", {"int", [](RunConfig&, const std::string&, int, const std::string&) {}}},
      {"cells_y", {"int", [](RunConfig&, const std::string&, int, const std::string&) {}}},
      {"length", {"real", [](RunConfig&, const std::string&, int, const std::string&) {}}},
      {"length_y", {"real", [](RunConfig&, const std::string&, int, const std::string&) {}}},
      {"profile", {"string", [](RunConfig& c, const std::string& v, int l, const std::string&) {
                     static const std::vector<std::string> known{"uniform", "cosine-bump",
                                                                 "proportional-pair", "vacuum-region"};
                     if (std::find(known.begin(), known.end(), v) == known.end())
                       throw ParseError("key 'profile': unknown profile '" + v + "'", l);
                     c.profile = v;
                   }}},
      {"amplitude", real(&RunConfig::amplitude)},
      {"ratio", real(&RunConfig::ratio)},
      {"perturbation", real(&RunConfig::perturbation)},
      {"velocity", real(&RunConfig::velocity)},
      {"magnetic", real(&RunConfig::magnetic)},
      {"mollify", {"int", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
                     c.mollify = parse_int(v, l, k) != 0;
                   }}},
      {"sweep_axis", {"string", [](RunConfig& c, const std::string& v, int l, const std::string&) {
                        if (v == "modes")
                          c.sweep_axis = SweepAxis::Modes;
                        else if (v == "epsilon")
                          c.sweep_axis = SweepAxis::Epsilon;
                        else if (v == "delta")
                          c.sweep_axis = SweepAxis::Delta;
                        else
                          throw ParseError("key 'sweep_axis': expected modes, epsilon or delta", l);
                      }}},
      {"sweep_values", {"reals", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
                          c.sweep_values = parse_reals(v, l, k);
                        }}},
      {"snapshots", {"int", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
                       c.snapshots = static_cast<int>(parse_int(v, l, k));
                     }}},
      {"energy_tolerance", real(&RunConfig::energy_tolerance)},
      {"case", {"string", [](RunConfig& c, const std::string& v, int, const std::string&) {
                  c.verify_case = v;
                }}},
      {"audit_samples", {"int", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
                           c.audit_samples = static_cast<int>(parse_int(v, l, k));
                         }}},
      {"audit_pairs", {"reals", [](RunConfig& c, const std::string& v, int l, const std::string& k) {
                         c.audit_pairs = parse_reals(v, l, k);
                         if (c.audit_pairs.size() % 2 != 0)
                           throw ParseError("key 'audit_pairs': needs (gamma+, gamma-) pairs", l);
                       }}},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::map<std::string, std::string> grid_keys;
  std::map<std::string, int> seen;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto colon = text.find(':');
    const auto eq = text.find('=');
    if (colon == std::string::npos || eq == std::string::npos || eq < colon)
      throw ParseError("expected 'key: type = value'", line);
    const std::string key = trim(text.substr(0, colon));
    const std::string type = trim(text.substr(colon + 1, eq - colon - 1));
    const std::string value = trim(text.substr(eq + 1));
    const auto it = entries().find(key);
    if (it == entries().end()) throw ParseError("unknown key '" + key + "'", line);
    if (type != it->second.type)
      throw ParseError("key '" + key + "' has type " + it->second.type + ", not '" + type + "'", line);
    if (value.empty()) throw ParseError("key '" + key + "' has no value", line);
    if (seen.count(key)) throw ParseError("key '" + key + "' given twice", line);
    seen[key] = line;
    it->second.set(c, value, line, key);
    if (key == "dim" || key == "cells" || key == "cells_y" || key == "length" || key == "length_y") {
      if (it->second.type == "int") parse_int(value, line, key);
      else parse_real(value, line, key);
      grid_keys[key] = value;
    }
  }

  auto get = [&](const std::string& k, double def) {
    return grid_keys.count(k) ? std::stod(grid_keys[k]) : def;
  };
  const int dim = static_cast<int>(get("dim", 1));
  const int cells = static_cast<int>(get("cells", 128));
  const double length = get("length", 1.0);
  if (dim == 2)
    c.sim.grid = Grid::box(length, get("length_y", length), cells,
                           static_cast<int>(get("cells_y", cells)));
  else if (dim == 1)
    c.sim.grid = Grid::line(length, cells);
  else
    throw ValidationError("grid dimension must be 1 or 2");
  if (!c.b_given) c.sim.reg.B = std::ceil(c.sim.closure.exponent_a()) + 2.0;
  if (c.snapshots < 2) throw ValidationError("snapshots must be at least 2");
  c.sim.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string(), 0);
  return parse_config(in);
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream o;
  const SimConfig& s = c.sim;
  auto real = [&](const char* k, double v) { o << k << ": real = " << format_real(v) << '\n'; };
  auto integer = [&](const char* k, long v) { o << k << ": int = " << v << '\n'; };
  auto str = [&](const char* k, const std::string& v) { o << k << ": string = " << v << '\n'; };
  real("gamma_plus", s.closure.gamma_plus);
  real("gamma_minus", s.closure.gamma_minus);
  str("law", s.closure.law == PressureLaw::Implicit ? "implicit" : "explicit");
  if (c.c0_given) real("c0", s.closure.c0);
  real("delta", s.reg.delta);
  real("B", s.reg.B);
  real("beta", s.reg.beta);
  real("epsilon", s.epsilon);
  real("mu", s.mu);
  real("lambda", s.lambda);
  real("nu", s.nu);
  real("dt", s.dt);
  real("t_end", s.t_end);
  real("sigma", s.sigma);
  integer("modes", s.modes);
  integer("dim", s.grid.dim());
  integer("cells", s.grid.cells(0));
  real("length", s.grid.extent(0));
  if (s.grid.dim() == 2) {
    integer("cells_y", s.grid.cells(1));
    real("length_y", s.grid.extent(1));
  }
  str("profile", c.profile);
  real("amplitude", c.amplitude);
  real("ratio", c.ratio);
  real("perturbation", c.perturbation);
  real("velocity", c.velocity);
  real("magnetic", c.magnetic);
  integer("mollify", c.mollify ? 1 : 0);
  str("sweep_axis", axis_name(c.sweep_axis));
  o << "sweep_values: reals = ";
  for (std::size_t i = 0; i < c.sweep_values.size(); ++i)
    o << (i ? ", " : "") << format_real(c.sweep_values[i]);
  o << '\n';
  integer("snapshots", c.snapshots);
  real("energy_tolerance", c.energy_tolerance);
  str("case", c.verify_case);
  integer("audit_samples", c.audit_samples);
  o << "audit_pairs: reals = ";
  for (std::size_t i = 0; i < c.audit_pairs.size(); ++i)
    o << (i ? ", " : "") << format_real(c.audit_pairs[i]);
  o << '\n';
  return o.str();
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config(config))));
  return buf;
}

InitialData make_initial_data(const RunConfig& c, const SimConfig& sim) {
  const Grid& g = sim.grid;
  const double pi = std::numbers::pi;
  const double lx = g.extent(0);
  const double ly = g.extent(1);
  const bool two = g.dim() == 2;
  InitialData d;
  d.rho0 = ScalarField(g, Boundary::Neumann);
  d.n0 = ScalarField(g, Boundary::Neumann);
  d.m0 = VectorField(g, Boundary::Dirichlet);
  d.magnetic0 = ScalarField(g, Boundary::Dirichlet);
  for (int j = 0; j < g.nodes(1); ++j)
    for (int i = 0; i < g.nodes(0); ++i) {
      const std::size_t id = g.index(i, j);
      const double x = g.coord(0, i);
      const double y = two ? g.coord(1, j) : 0.0;
      const double cx = std::cos(pi * x / lx) * (two ? std::cos(pi * y / ly) : 1.0);
      const double sx = std::sin(pi * x / lx) * (two ? std::sin(pi * y / ly) : 1.0);
      double rho = 1.0, n = 1.0;
      if (c.profile == "cosine-bump") {
        rho = 1.0 + c.amplitude * cx;
        n = 1.0 - 0.5 * c.amplitude * cx;
      } else if (c.profile == "proportional-pair") {
        n = 1.0 + c.amplitude * cx;
        rho = c.ratio * (1.0 + c.perturbation * std::sin(pi * x / lx)) * n;
      } else if (c.profile == "vacuum-region") {
        // Zero on the first quarter of the box, smooth ramp up to 1 + amplitude.
        const double z = std::clamp((x / lx - 0.25) / 0.25, 0.0, 1.0);
        rho = z * z * (3.0 - 2.0 * z) * (1.0 + c.amplitude);
        n = rho;
      }
      d.rho0[id] = rho;
      d.n0[id] = n;
      const bool wall = g.on_boundary(id);
      if (!wall) {
        d.m0.comp[0][id] = (rho + n) * c.velocity * sx;
        if (two) d.m0.comp[1][id] = -(rho + n) * c.velocity * sx;
        d.magnetic0[id] = two ? c.magnetic * lx / pi * sx : c.magnetic * sx;
      }
    }
  return d;
}

InitialData prepare_initial_data(RunConfig& c) {
  InitialData d = make_initial_data(c, c.sim);
  if (!c.c0_given) {
    const double b = ratio_bound(d.rho0, d.n0);
    c.sim.closure.c0 = std::isfinite(b) ? b : 1.0;
  }
  if (c.mollify) d = mollify_initial_data(d, c.sim.reg.delta, c.sim.reg.B, c.sim.closure.c0);
  return d;
}

namespace {

void put_raw(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.write(buf, 8);
}

double get_raw(std::istream& in) {
  char buf[8];
  if (!in.read(buf, 8)) throw ParseError("checkpoint data truncated", 0);
  std::uint64_t bits;
  std::memcpy(&bits, buf, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_checkpoint(std::ostream& out, const SimState& s) {
  nlohmann::ordered_json h;
  h["format"] = "bifluid-checkpoint";
  h["version"] = 1;
  h["steps"] = s.steps;
  h["coefficients"] = s.u_coeffs.size();
  h["mass_matrix_regularized"] = s.mass_matrix_regularized;
  out << h.dump() << '\n';
  for (double v : {s.time, s.dissipation_integral, s.eps_dissipation_integral, s.eps_weighted_integral})
    put_raw(out, v);
  for (double v : s.u_coeffs) put_raw(out, v);
  Snapshot snap;
  snap.grid = s.rho.grid;
  snap.time = s.time;
  snap.names = {"rho", "n", "magnetic"};
  snap.fields = {s.rho.values, s.n.values, s.magnetic.values};
  write_snapshot(out, snap);
}

SimState read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty checkpoint", 1);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what(), 1);
  }
  if (h.value("format", "") != "bifluid-checkpoint") throw ParseError("not a checkpoint file", 1);
  SimState s;
  s.steps = h.at("steps").get<long>();
  s.mass_matrix_regularized = h.at("mass_matrix_regularized").get<bool>();
  s.time = get_raw(in);
  s.dissipation_integral = get_raw(in);
  s.eps_dissipation_integral = get_raw(in);
  s.eps_weighted_integral = get_raw(in);
  s.u_coeffs.resize(h.at("coefficients").get<std::size_t>());
  for (double& v : s.u_coeffs) v = get_raw(in);
  const Snapshot snap = read_snapshot(in);
  if (snap.fields.size() != 3) throw ParseError("checkpoint needs rho, n and magnetic fields", 2);
  s.rho = ScalarField(snap.grid, Boundary::Neumann);
  s.rho.values = snap.fields[0];
  s.n = ScalarField(snap.grid, Boundary::Neumann);
  s.n.values = snap.fields[1];
  s.magnetic = ScalarField(snap.grid, Boundary::Dirichlet);
  s.magnetic.values = snap.fields[2];
  return s;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void save_checkpoint(const std::filesystem::path& path, const SimState& state) {
  std::ostringstream o(std::ios::binary);
  write_checkpoint(o, state);
  write_file_atomic(path, o.str());
}

SimState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string(), 0);
  return read_checkpoint(in);
}

void write_manifest(const std::filesystem::path& dir, const RunConfig& config,
                    const std::string& command, const std::vector<std::string>& files) {
  nlohmann::ordered_json m;
  m["command"] = command;
  m["config_hash"] = config_hash(config);
  m["config"] = canonical_config(config);
  m["files"] = files;
  m["reference_note"] =
      "defect functionals compare each member with the last (smallest-parameter) member, "
      "which stands in for the weak limit";
  write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
}

std::string invariants_csv(const std::vector<InvariantResult>& inv) {
  std::ostringstream o;
  o << "invariant,passed,worst\n";
  for (const auto& r : inv) o << r.name << ',' << (r.passed ? 1 : 0) << ',' << format_real(r.worst) << '\n';
  return o.str();
}

std::string sweep_members_csv(const SweepReport& rep) {
  std::ostringstream o;
  o << "sequence_index,functional,value\n";
  for (std::size_t i = 0; i < rep.members.size(); ++i) {
    const auto& m = rep.members[i];
    const auto& l = m.final_ledger;
    const std::pair<const char*, double> rows[] = {
        {"parameter", m.parameter},
        {"energy", l.energy()},
        {"energy_delta", l.energy_delta()},
        {"dissipation_integral", l.dissipation_integral},
        {"eps_dissipation", l.eps_dissipation},
        {"eps_dissipation_integral", l.eps_dissipation_integral},
        {"eps_weighted_integral", l.eps_weighted_integral},
        {"ratio_min", l.ratio_min},
        {"mass_rho", l.mass_rho},
        {"mass_n", l.mass_n},
        {"growth_constant", m.growth_constant},
    };
    for (const auto& [name, v] : rows) o << i << ',' << name << ',' << format_real(v) << '\n';
    for (const auto& inv : m.invariants) {
      o << i << ",invariant_" << inv.name << ',' << (inv.passed ? 1 : 0) << '\n';
      o << i << ",worst_" << inv.name << ',' << format_real(inv.worst) << '\n';
    }
    if (i + 1 < rep.members.size() && i < rep.successive_distances.size())
      o << i << ",distance_to_next," << format_real(rep.successive_distances[i]) << '\n';
  }
  return o.str();
}

std::string convergence_csv(const ConvergenceTable& t) {
  std::ostringstream o;
  o << "case,cells,dt,field,error\n";
  for (const auto& r : t.rows) {
    for (std::size_t f = 0; f < r.errors.size(); ++f)
      o << t.case_id << ',' << r.cells << ',' << format_real(r.dt) << ',' << t.fields[f] << ','
        << format_real(r.errors[f]) << '\n';
    o << t.case_id << ',' << r.cells << ',' << format_real(r.dt) << ",total," << format_real(r.error)
      << '\n';
  }
  for (std::size_t i = 0; i < t.orders.size(); ++i)
    o << t.case_id << ",order_" << i << ",,," << format_real(t.orders[i]) << '\n';
  return o.str();
}

std::string audit_csv(const std::vector<AuditReport>& reports) {
  std::ostringstream o;
  o << "gamma_plus,gamma_minus,check,worst_slack,count\n";
  for (const auto& r : reports)
    for (const auto& row : r.rows)
      o << format_real(r.params.gamma_plus) << ',' << format_real(r.params.gamma_minus) << ','
        << row.name << ',' << format_real(row.worst) << ',' << row.count << '\n';
  return o.str();
}

}  // namespace bifluid
