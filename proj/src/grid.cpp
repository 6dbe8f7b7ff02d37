#include "bifluid/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "bifluid/errors.hpp"

namespace bifluid {

Grid::Grid(int dim, std::array<double, 2> extent, std::array<int, 2> cells)
    : dim_(dim), extent_(extent), cells_(cells) {
  if (dim != 1 && dim != 2) throw ValidationError("grid dimension must be 1 or 2");
  if (dim == 1) {
    extent_[1] = 1.0;
    cells_[1] = 1;
  }
  for (int a = 0; a < dim; ++a) {
    if (cells_[a] < 8) throw ValidationError("grid needs at least 8 cells per dimension");
    if (!(extent_[a] > 0.0) || !std::isfinite(extent_[a]))
      throw ValidationError("grid extent must be positive");
  }
  const int nx = nodes(0);
  const int ny = nodes(1);
  weights_.assign(static_cast<std::size_t>(nx) * ny, 0.0);
  auto w1 = [](int i, int n, double h) { return (i == 0 || i == n - 1) ? 0.5 * h : h; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      double w = w1(i, nx, spacing(0));
      if (dim_ == 2) w *= w1(j, ny, spacing(1));
      weights_[index(i, j)] = w;
    }
}

Grid Grid::line(double length, int cells) { return Grid(1, {length, 1.0}, {cells, 1}); }

Grid Grid::box(double lx, double ly, int nx, int ny) { return Grid(2, {lx, ly}, {nx, ny}); }

double Grid::volume() const { return dim_ == 1 ? extent_[0] : extent_[0] * extent_[1]; }

bool Grid::on_boundary(std::size_t idx) const {
  const int nx = nodes(0);
  const int i = static_cast<int>(idx % nx);
  const int j = static_cast<int>(idx / nx);
  if (i == 0 || i == nx - 1) return true;
  return dim_ == 2 && (j == 0 || j == nodes(1) - 1);
}

bool Grid::operator==(const Grid& other) const {
  return dim_ == other.dim_ && extent_ == other.extent_ && cells_ == other.cells_;
}

namespace {

void require_same(const Grid& a, const Grid& b) {
  if (!(a == b)) throw DomainError("fields live on different grids");
}

}  // namespace

std::vector<double> difference(const Grid& grid, const std::vector<double>& f, int axis) {
  if (axis >= grid.dim()) return std::vector<double>(f.size(), 0.0);
  const int nx = grid.nodes(0);
  const int ny = grid.nodes(1);
  const int n = grid.nodes(axis);
  const double h = grid.spacing(axis);
  std::vector<double> d(f.size(), 0.0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int p = axis == 0 ? i : j;
      auto at = [&](int q) { return axis == 0 ? f[grid.index(q, j)] : f[grid.index(i, q)]; };
      double v;
      if (p == 0)
        v = (at(1) - at(0)) / h;
      else if (p == n - 1)
        v = (at(n - 1) - at(n - 2)) / h;
      else
        v = (at(p + 1) - at(p - 1)) / (2.0 * h);
      d[grid.index(i, j)] = v;
    }
  return d;
}

VectorField gradient(const ScalarField& f) {
  const Grid& g = f.grid;
  VectorField out(g, f.bc == Boundary::Neumann ? Boundary::Dirichlet : Boundary::Neumann);
  for (int a = 0; a < g.dim(); ++a) {
    out.comp[a] = difference(g, f.values, a);
    if (f.bc != Boundary::Neumann) continue;
    // Homogeneous Neumann data: normal derivative is zero on the walls.
    const int nx = g.nodes(0);
    const int ny = g.nodes(1);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int p = a == 0 ? i : j;
        if (p == 0 || p == g.nodes(a) - 1) out.comp[a][g.index(i, j)] = 0.0;
      }
  }
  return out;
}

ScalarField divergence(const VectorField& v) {
  const Grid& g = v.grid;
  ScalarField out(g, Boundary::Neumann);
  for (int a = 0; a < g.dim(); ++a) {
    const auto d = difference(g, v.comp[a], a);
    for (std::size_t i = 0; i < d.size(); ++i) out.values[i] += d[i];
  }
  return out;
}

ScalarField laplacian(const ScalarField& f) {
  const Grid& g = f.grid;
  ScalarField out(g, f.bc);
  const int nx = g.nodes(0);
  const int ny = g.nodes(1);
  for (int a = 0; a < g.dim(); ++a) {
    const int n = g.nodes(a);
    const double h2 = g.spacing(a) * g.spacing(a);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int p = a == 0 ? i : j;
        auto at = [&](int q) {
          return a == 0 ? f.values[g.index(q, j)] : f.values[g.index(i, q)];
        };
        double v;
        if (p == 0)
          v = 2.0 * (at(1) - at(0)) / h2;
        else if (p == n - 1)
          v = 2.0 * (at(n - 2) - at(n - 1)) / h2;
        else
          v = (at(p + 1) - 2.0 * at(p) + at(p - 1)) / h2;
        out.values[g.index(i, j)] += v;
      }
  }
  if (f.bc == Boundary::Dirichlet)
    for (std::size_t i = 0; i < out.values.size(); ++i)
      if (g.on_boundary(i)) out.values[i] = 0.0;
  return out;
}

VectorField curl(const ScalarField& a) {
  if (a.grid.dim() != 2) throw DomainError("curl of a scalar needs a 2D grid");
  if (a.bc != Boundary::Dirichlet)
    throw DomainError("curl of a scalar needs a Dirichlet potential");
  VectorField out(a.grid, Boundary::Neumann);
  out.comp[0] = difference(a.grid, a.values, 1);
  out.comp[1] = difference(a.grid, a.values, 0);
  for (double& v : out.comp[1]) v = -v;
  return out;
}

ScalarField curl(const VectorField& v) {
  const Grid& g = v.grid;
  ScalarField out(g, Boundary::Neumann);
  const auto dy_dx = difference(g, v.comp[1], 0);
  if (g.dim() == 1) {
    out.values = dy_dx;
    return out;
  }
  const auto dx_dy = difference(g, v.comp[0], 1);
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = dy_dx[i] - dx_dy[i];
  return out;
}

double integrate(const Grid& grid, const std::vector<double>& f) {
  if (f.size() != grid.size()) throw DomainError("field size does not match grid");
  const auto& w = grid.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
  return s;
}

double integrate(const ScalarField& f) { return integrate(f.grid, f.values); }

double inner_product(const ScalarField& f, const ScalarField& g) {
  require_same(f.grid, g.grid);
  const auto& w = f.grid.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f.values[i] * g.values[i];
  return s;
}

double inner_product(const VectorField& f, const VectorField& g) {
  require_same(f.grid, g.grid);
  const auto& w = f.grid.weights();
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i)
    s += w[i] * (f.comp[0][i] * g.comp[0][i] + f.comp[1][i] * g.comp[1][i]);
  return s;
}

GalerkinBasis::GalerkinBasis(const Grid& grid, int modes) : grid_(grid), modes_(modes) {
  if (modes < 1) throw DomainError("basis needs at least one mode");
  const double pi = std::numbers::pi;
  const int px = grid.cells(0) - 1;
  const int py = grid.dim() == 2 ? grid.cells(1) - 1 : 1;
  if (static_cast<long>(modes) > static_cast<long>(px) * py) {
    std::ostringstream msg;
    msg << modes << " modes exceed the Nyquist limit " << static_cast<long>(px) * py
        << " of the grid";
    throw DomainError(msg.str());
  }

  std::vector<std::tuple<double, int, int>> cand;
  const double lx = grid.extent(0);
  const double ly = grid.extent(1);
  for (int p = 1; p <= px; ++p) {
    if (grid.dim() == 1) {
      cand.emplace_back(std::pow(p * pi / lx, 2), p, 0);
      continue;
    }
    for (int q = 1; q <= py; ++q)
      cand.emplace_back(std::pow(p * pi / lx, 2) + std::pow(q * pi / ly, 2), p, q);
  }
  std::sort(cand.begin(), cand.end());
  cand.resize(modes);

  const int nx = grid.nodes(0);
  const int ny = grid.nodes(1);
  for (const auto& [lambda, p, q] : cand) {
    eigenvalues_.push_back(lambda);
    waves_.emplace_back(p, q);
    std::vector<double> val(grid.size());
    std::array<std::vector<double>, 2> der{std::vector<double>(grid.size(), 0.0),
                                           std::vector<double>(grid.size(), 0.0)};
    const double kx = p * pi / lx;
    const double ky = q * pi / ly;
    const double norm = grid.dim() == 1 ? std::sqrt(2.0 / lx) : 2.0 / std::sqrt(lx * ly);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double x = grid.coord(0, i);
        const std::size_t id = grid.index(i, j);
        // Boundary nodes are set to exact zeros so Dirichlet data is exact.
        const double sx = (i == 0 || i == nx - 1) ? 0.0 : std::sin(kx * x);
        const double cx = std::cos(kx * x);
        if (grid.dim() == 1) {
          val[id] = norm * sx;
          der[0][id] = norm * kx * cx;
          continue;
        }
        const double y = grid.coord(1, j);
        const double sy = (j == 0 || j == ny - 1) ? 0.0 : std::sin(ky * y);
        const double cy = std::cos(ky * y);
        val[id] = norm * sx * sy;
        der[0][id] = norm * kx * cx * sy;
        der[1][id] = norm * ky * sx * cy;
      }
    values_.push_back(std::move(val));
    derivs_.push_back(std::move(der));
  }
}

std::vector<double> GalerkinBasis::project(const ScalarField& f) const {
  require_same(f.grid, grid_);
  if (f.bc != Boundary::Dirichlet) throw DomainError("projection needs a Dirichlet field");
  std::vector<double> c(modes_);
  const auto& w = grid_.weights();
  for (int j = 0; j < modes_; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * f.values[i] * values_[j][i];
    c[j] = s;
  }
  return c;
}

ScalarField GalerkinBasis::reconstruct(const std::vector<double>& coeffs) const {
  if (coeffs.size() != static_cast<std::size_t>(modes_))
    throw DomainError("coefficient count does not match basis");
  ScalarField f(grid_, Boundary::Dirichlet);
  for (int j = 0; j < modes_; ++j)
    for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] += coeffs[j] * values_[j][i];
  return f;
}

std::vector<double> GalerkinBasis::project_vector(const VectorField& v) const {
  std::vector<double> c(velocity_size());
  for (int a = 0; a < grid_.dim(); ++a) {
    ScalarField comp(grid_, Boundary::Dirichlet);
    comp.values = v.comp[a];
    const auto ca = project(comp);
    std::copy(ca.begin(), ca.end(), c.begin() + a * modes_);
  }
  return c;
}

VectorField GalerkinBasis::reconstruct_vector(const std::vector<double>& coeffs) const {
  if (coeffs.size() != static_cast<std::size_t>(velocity_size()))
    throw DomainError("coefficient count does not match basis");
  VectorField v(grid_, Boundary::Dirichlet);
  for (int a = 0; a < grid_.dim(); ++a)
    for (int j = 0; j < modes_; ++j) {
      const double c = coeffs[a * modes_ + j];
      if (c == 0.0) continue;
      for (std::size_t i = 0; i < grid_.size(); ++i) v.comp[a][i] += c * values_[j][i];
    }
  return v;
}

std::vector<double> GalerkinBasis::velocity_derivative(const std::vector<double>& coeffs,
                                                       int c, int axis) const {
  std::vector<double> d(grid_.size(), 0.0);
  if (axis >= grid_.dim() || c >= grid_.dim()) return d;
  for (int j = 0; j < modes_; ++j) {
    const double a = coeffs[c * modes_ + j];
    if (a == 0.0) continue;
    const auto& dj = derivs_[j][axis];
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += a * dj[i];
  }
  return d;
}

namespace {

void put_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.write(buf, 8);
}

double get_le(std::istream& in) {
  char buf[8];
  if (!in.read(buf, 8)) throw ParseError("snapshot data truncated", 0);
  std::uint64_t bits;
  std::memcpy(&bits, buf, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

}  // namespace

void write_snapshot(std::ostream& out, const Snapshot& snap) {
  nlohmann::ordered_json h;
  h["dim"] = snap.grid.dim();
  h["cells"] = {snap.grid.cells(0), snap.grid.cells(1)};
  h["extent"] = {snap.grid.extent(0), snap.grid.extent(1)};
  h["fields"] = snap.names;
  h["time"] = snap.time;
  out << h.dump() << '\n';
  for (const auto& f : snap.fields) {
    if (f.size() != snap.grid.size()) throw DomainError("snapshot field size mismatch");
    for (double v : f) put_le(out, v);
  }
}

Snapshot read_snapshot(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing snapshot header", 1);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad snapshot header: ") + e.what(), 1);
  }
  Snapshot s;
  const int dim = h.at("dim").get<int>();
  s.grid = Grid(dim, {h["extent"][0].get<double>(), h["extent"][1].get<double>()},
                {h["cells"][0].get<int>(), h["cells"][1].get<int>()});
  s.time = h.at("time").get<double>();
  s.names = h.at("fields").get<std::vector<std::string>>();
  for (std::size_t k = 0; k < s.names.size(); ++k) {
    std::vector<double> f(s.grid.size());
    for (double& v : f) v = get_le(in);
    s.fields.push_back(std::move(f));
  }
  return s;
}

}  // namespace bifluid
