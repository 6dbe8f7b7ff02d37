#pragma once

// Integral quantities, invariant residuals and defect functionals evaluated
// on stored states. Everything here is a pure function of its inputs.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bifluid/model.hpp"

namespace bifluid {

struct EnergyLedger {
  double time = 0.0;
  double kinetic = 0.0;     // int (rho+n)|u|^2 / 2
  double magnetic = 0.0;    // int |H|^2 / 2
  double internal = 0.0;    // int H_P
  double artificial = 0.0;  // int h_delta
  double sigma_l2 = 0.0;    // Sigma int (rho^2 + n^2)
  double dissipation_rate = 0.0;
  double eps_dissipation = 0.0;
  double eps_dissipation_weighted = 0.0;
  double ratio_min = 0.0;   // min (c0 rho - n, c0 n - rho)
  double density_min = 0.0;
  double div_h_max = 0.0;
  double mass_rho = 0.0;
  double mass_n = 0.0;
  // Carried over from the state.
  double dissipation_integral = 0.0;
  double eps_dissipation_integral = 0.0;
  double eps_weighted_integral = 0.0;
  bool mass_matrix_regularized = false;

  double energy() const { return kinetic + magnetic + internal + artificial; }
  /// Sigma int(rho^2+n^2) + int (rho+n)|u|^2 + |H|^2 + 2 (H_P + h_delta).
  double energy_delta() const { return sigma_l2 + 2.0 * energy(); }
};

EnergyLedger energy_ledger(const SimState& state, const SimConfig& config,
                           const GalerkinBasis& basis);
EnergyLedger energy_ledger(const SimState& state, const SimConfig& config);

/// int H_P evaluated through the real variables (alpha, rho_+, rho_-).
double internal_energy_real(const SimState& state, const SimConfig& config);

/// Quadrature of the full energy integrand in one pass.
double direct_energy(const SimState& state, const SimConfig& config,
                     const GalerkinBasis& basis);

/// Smallest C with E_delta(t) + dissipation <= E_delta(0) + C Sigma t e^{C Sigma t}
/// over the ledger series; 0 when the plain inequality already holds.
double empirical_growth_constant(const std::vector<EnergyLedger>& ledgers, double sigma);

// Truncations T_k(z) = k T(z/k), with T(z) = z on [0,1], 2 on [3, inf) and a
// concave polynomial in between; L_k and b_k = L_k - beta_k z are the
// associated renormalizing functions (b_k'(z) z - b_k(z) = T_k(z)).
double cutoff_t(double z);
double cutoff_tk(double z, double k);
double cutoff_tk_derivative(double z, double k);
double cutoff_lk(double z, double k);
double cutoff_beta(double k);
double cutoff_bk(double z, double k);
double cutoff_bk_derivative(double z, double k);

struct Trajectory {
  SimConfig config;
  double parameter = 0.0;
  std::vector<SimState> snapshots;
  std::vector<EnergyLedger> ledgers;  // one per step, including t = 0
};

struct DefectMember {
  double parameter = 0.0;
  double nlogn_gap = 0.0;
  double osc = 0.0;
  std::vector<double> s_convergence;  // one per exponent p
  double evf_covariance = 0.0;
  double evf_gap = 0.0;
  double bogovskii_pressure = 0.0;    // int int n P + delta (n^{B+1} + n rho^B)
  double bogovskii_density = 0.0;     // int int n^{g- + gBog} + rho^{g+} n^{gBog}
};

struct DefectReport {
  int reference = 0;
  std::vector<double> p_values;
  std::vector<DefectMember> members;
  double gamma_bog = 0.0;
  double xi = 0.0;
  double theta = 0.0;
  double exponent_lhs = 0.0;  // gamma- - gamma-/gamma+ + 1 + Xi
  bool exponent_condition = false;
  std::string note;
};

/// Limits are represented by member `reference`. Throws DomainError on
/// mismatched grids or snapshot times.
DefectReport defect_report(const std::vector<Trajectory>& sequence, int reference,
                           const std::vector<double>& p_values = {1.0, 2.0});

/// Whether `values` is non-increasing (up to an absolute `slack`).
bool non_increasing(const std::vector<double>& values, double slack = 0.0);

struct Renormalizer {
  std::function<double(double)> b;
  std::function<double(double)> db;
};

Renormalizer identity_renormalizer();
Renormalizer truncation_renormalizer(double k);

/// Weak residual of d_t b(f) + div(b(f) u) + (b'(f) f - b(f)) div u = 0
/// against psi(x) = prod cos(pi x_a / L_a) + 2, for f = rho (species 0) or n.
double renormalization_residual(const Trajectory& trajectory, const Renormalizer& b,
                                int species = 1);

// CSV emitters (17 significant digits).
void write_ledger_csv(std::ostream& out, const std::vector<EnergyLedger>& ledgers);
void write_defect_csv(std::ostream& out, const DefectReport& report);

}  // namespace bifluid
