#pragma once

// Configuration and state of the regularized two-fluid MHD approximation.

#include <functional>
#include <vector>

#include "bifluid/closure.hpp"
#include "bifluid/grid.hpp"

namespace bifluid {

struct SimConfig {
  ClosureParams closure;
  RegularizationParams reg;
  double epsilon = 0.0;
  double mu = 1.0;
  double lambda = 0.0;
  double nu = 1.0;
  int modes = 16;
  double dt = 1e-3;
  double t_end = 0.1;
  double sigma = 1.0;  // weight of the L^2 density term in E_delta
  Grid grid = Grid::line(1.0, 128);

  /// Throws ValidationError naming the violated hypothesis.
  void validate() const;
};

struct SimState {
  double time = 0.0;
  long steps = 0;
  ScalarField rho;                // Neumann
  ScalarField n;                  // Neumann
  std::vector<double> u_coeffs;   // Galerkin coefficients, component-major
  ScalarField magnetic;           // transverse H in 1D, potential A_z in 2D (Dirichlet)

  // Running time integrals of the dissipation terms.
  double dissipation_integral = 0.0;
  double eps_dissipation_integral = 0.0;
  double eps_weighted_integral = 0.0;
  bool mass_matrix_regularized = false;
};

struct InitialData {
  ScalarField rho0;
  ScalarField n0;
  VectorField m0;        // momentum (rho0 + n0) u0
  ScalarField magnetic0; // transverse H0 in 1D, potential A_z in 2D
};

/// Optional source terms, evaluated at the end of each sub-step.
struct Forcing {
  std::function<double(double t, double x, double y)> rho;
  std::function<double(double t, double x, double y)> n;
  std::function<double(double t, double x, double y)> magnetic;
  std::function<std::array<double, 2>(double t, double x, double y)> momentum;
};

/// Magnetic field as a vector: (0, H) in 1D, curl A_z in 2D.
VectorField magnetic_field(const SimState& state);

}  // namespace bifluid
