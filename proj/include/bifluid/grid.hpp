#pragma once

// Vertex-centered structured grids on [0, Lx] (x [0, Ly]), grid functions,
// summation-by-parts difference operators and the sine Galerkin basis.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace bifluid {

enum class Boundary { Neumann, Dirichlet };

class Grid {
 public:
  Grid() = default;
  /// Throws ValidationError unless dim is 1 or 2, cells >= 8 and extents > 0.
  Grid(int dim, std::array<double, 2> extent, std::array<int, 2> cells);

  static Grid line(double length, int cells);
  static Grid box(double lx, double ly, int nx, int ny);

  int dim() const { return dim_; }
  int cells(int axis) const { return cells_[axis]; }
  int nodes(int axis) const { return axis < dim_ ? cells_[axis] + 1 : 1; }
  double extent(int axis) const { return extent_[axis]; }
  double spacing(int axis) const { return extent_[axis] / cells_[axis]; }
  std::size_t size() const { return weights_.size(); }
  double volume() const;

  std::size_t index(int i, int j = 0) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(nodes(0)) * j;
  }
  double coord(int axis, int i) const { return spacing(axis) * i; }
  bool on_boundary(std::size_t idx) const;

  /// Trapezoid quadrature weights (tensor product in 2D).
  const std::vector<double>& weights() const { return weights_; }

  bool operator==(const Grid& other) const;

 private:
  int dim_ = 1;
  std::array<double, 2> extent_{1.0, 1.0};
  std::array<int, 2> cells_{8, 1};
  std::vector<double> weights_;
};

struct ScalarField {
  Grid grid;
  Boundary bc = Boundary::Neumann;
  std::vector<double> values;

  ScalarField() = default;
  ScalarField(const Grid& g, Boundary b, double fill = 0.0)
      : grid(g), bc(b), values(g.size(), fill) {}

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Two components per node. In 1D, x is the longitudinal and y the
/// transverse component.
struct VectorField {
  Grid grid;
  Boundary bc = Boundary::Dirichlet;
  std::array<std::vector<double>, 2> comp;

  VectorField() = default;
  VectorField(const Grid& g, Boundary b)
      : grid(g), bc(b), comp{std::vector<double>(g.size(), 0.0),
                             std::vector<double>(g.size(), 0.0)} {}
};

// Difference operators. First derivatives are centered in the interior and
// one-sided at walls, which makes them skew-adjoint under the trapezoid
// product up to boundary terms. Throw DomainError on bc/operator mismatch.
VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& v);
ScalarField laplacian(const ScalarField& f);
VectorField curl(const ScalarField& a);   // 2D, Dirichlet potential
ScalarField curl(const VectorField& v);   // 2D in-plane; 1D transverse

/// Derivative of raw nodal data along one axis with the same stencil.
std::vector<double> difference(const Grid& grid, const std::vector<double>& f, int axis);

double integrate(const ScalarField& f);
double integrate(const Grid& grid, const std::vector<double>& f);
double inner_product(const ScalarField& f, const ScalarField& g);
double inner_product(const VectorField& f, const VectorField& g);

/// Eigenfunctions of the Dirichlet Laplacian on the box, sorted by eigenvalue.
class GalerkinBasis {
 public:
  GalerkinBasis() = default;
  /// Throws DomainError when `modes` exceeds what the grid can resolve.
  GalerkinBasis(const Grid& grid, int modes);

  const Grid& grid() const { return grid_; }
  int modes() const { return modes_; }
  double eigenvalue(int j) const { return eigenvalues_[j]; }
  std::pair<int, int> wave_numbers(int j) const { return waves_[j]; }

  const std::vector<double>& values(int j) const { return values_[j]; }
  const std::vector<double>& derivative(int j, int axis) const { return derivs_[j][axis]; }

  /// Scalar modes: k coefficients. Velocity-like data: dim * k coefficients,
  /// component c at offset c * k.
  std::vector<double> project(const ScalarField& f) const;
  ScalarField reconstruct(const std::vector<double>& coeffs) const;

  std::vector<double> project_vector(const VectorField& v) const;
  VectorField reconstruct_vector(const std::vector<double>& coeffs) const;
  /// Exact derivative d(component c)/d(axis) of the reconstructed velocity.
  std::vector<double> velocity_derivative(const std::vector<double>& coeffs, int c,
                                          int axis) const;
  int velocity_size() const { return modes_ * grid_.dim(); }

 private:
  Grid grid_;
  int modes_ = 0;
  std::vector<double> eigenvalues_;
  std::vector<std::pair<int, int>> waves_;
  std::vector<std::vector<double>> values_;
  std::vector<std::array<std::vector<double>, 2>> derivs_;
};

struct Snapshot {
  Grid grid;
  double time = 0.0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> fields;
};

/// One-line JSON header {dim, cells, extent, fields, time} followed by raw
/// little-endian float64 data, one block per field.
void write_snapshot(std::ostream& out, const Snapshot& snap);
Snapshot read_snapshot(std::istream& in);

}  // namespace bifluid
