#pragma once

// Bi-fluid pressure closure.
//
// The academic variables (rho, n) = (alpha rho_+, (1-alpha) rho_-) are tied to
// the species densities through the pressure equilibrium
// rho_+^{gamma+} = rho_-^{gamma-}. Writing r = gamma+/gamma- the species
// density rho_+ is the unique non-negative root of
//
//     rho_+ * rho_+^r - rho_+^r * rho - n * rho_+ = 0,
//
// and the pressure is P(rho, n) = rho_+^{gamma+}. Everything in this header is
// a pure function of its arguments.

#include <span>
#include <vector>

namespace bifluid {

enum class PressureLaw { Implicit, Explicit };

struct ClosureParams {
  double gamma_plus = 2.0;
  double gamma_minus = 2.0;
  PressureLaw law = PressureLaw::Implicit;
  double c0 = 1.0;

  /// Throws ValidationError unless gamma+ >= 1, gamma- > 0, c0 >= 1.
  void validate() const;

  /// Exponent of q(x) = x^r mapping rho_+ to rho_-.
  double r() const { return gamma_plus / gamma_minus; }

  double q_lower() const;   // min{1, gamma-/gamma+}
  double q_upper() const;   // max{1, gamma-/gamma+}
  double q1_lower() const;  // min{1, gamma+/gamma-}
  double q1_upper() const;  // max{1, gamma+/gamma-}
  double c_lower() const;   // q_lower^{gamma+}
  double c_upper() const;   // (2 q_upper)^{gamma+}

  /// Growth exponent of the H_P Hessian; B >= A + 2 is required of the
  /// artificial pressure.
  double exponent_a() const;
};

struct RegularizationParams {
  double delta = 1e-2;
  double B = 4.0;
  double beta = 4.0;  // explicit law only

  /// Throws ValidationError unless delta > 0 and B >= A + 2.
  void validate(const ClosureParams& closure) const;
};

struct ClosureEval {
  double rho = 0.0;
  double n = 0.0;
  double rho_plus = 0.0;
  double rho_minus = 0.0;
  double alpha = 1.0;
  double pressure = 0.0;
};

struct PressurePartials {
  double drho_rho_plus = 0.0;
  double dn_rho_plus = 0.0;
  double drho_p = 0.0;
  double dn_p = 0.0;
  double dnn_p = 0.0;
};

struct RealVariables {
  double alpha = 1.0;
  double rho_plus = 0.0;
  double rho_minus = 0.0;
  bool degenerate = false;
};

struct PiDecomposition {
  double pi = 0.0;
  double monotone_witness = 0.0;
};

struct HessianBoundReport {
  double h_rr = 0.0;
  double h_rn = 0.0;
  double h_nn = 0.0;
  double constant = 0.0;          // smallest C with sum <= C (1 + rho^A)
  double constant_refined = 0.0;  // same with the difference step halved
  bool stable = false;            // constants agree within a factor 2
};

// Root of the closure equation. Exact boundary branches: rho when n = 0,
// n^{gamma-/gamma+} when rho = 0, 0 at the origin.
double solve_rho_plus(double rho, double n, const ClosureParams& params);

ClosureEval evaluate(double rho, double n, const ClosureParams& params);

double pressure(double rho, double n, const ClosureParams& params);

/// First partials of rho_+ and P, and the second n-derivative of P.
/// The rho_+ partials always refer to the implicit closure.
PressurePartials pressure_partials(double rho, double n,
                                   const ClosureParams& params);

/// H_P(rho, n) = rho * int_1^rho P(z, z n / rho) / z^2 dz (signed for rho < 1).
/// Explicit law: G_{gamma+}(rho) + G_{gamma-}(n).
double energy_density_hp(double rho, double n, const ClosureParams& params);

/// The same potential written in the real variables (alpha, rho_+, rho_-).
double energy_density_real(double alpha, double rho_plus, double rho_minus,
                           const ClosureParams& params);

/// |rho dH/drho + n dH/dn - H - P| with finite-difference partials of H_P.
double euler_identity_residual(double rho, double n,
                               const ClosureParams& params);

/// Pi_delta = P + delta (rho^B + n^B + rho^2 n^{B-2}/2 + n^2 rho^{B-2}/2);
/// explicit law: P + delta (rho + n)^beta.
double artificial_pressure(double rho, double n, const ClosureParams& params,
                           const RegularizationParams& reg);

/// Energy density paired with the artificial pressure term.
double h_delta(double rho, double n, const RegularizationParams& reg,
               const ClosureParams& params);

/// H_P + h_delta.
double total_energy_density(double rho, double n, const ClosureParams& params,
                            const RegularizationParams& reg);

double ratio_s(double rho, double n);

/// pi(n, s) = P(ns, n) - (q1_lower / 2) n^{gamma-}; the witness is the
/// smallest forward difference of n -> pi(n, s) over `n_grid`.
PiDecomposition pi_decomposition(double n, double s, const ClosureParams& params,
                                 std::span<const double> n_grid);

RealVariables recover_real_variables(double rho, double n,
                                     const ClosureParams& params);

HessianBoundReport hessian_hp_bound_check(double rho, double n,
                                          const ClosureParams& params,
                                          double r_lower);

bool in_ratio_set(double rho, double n, double c0, double slack = 0.0);

// Analytic bounds, with the constants the bracket argument produces.
namespace bounds {

double rho_plus_n_constant(const ClosureParams& params);
double drho_p_constant(const ClosureParams& params);
double dn_p_constant(const ClosureParams& params);
double dnn_p_constant(const ClosureParams& params);

/// Normalized slacks (bound - value) / max(1, |bound|); every entry is
/// non-negative when the corresponding inequality holds.
struct Slacks {
  double bracket_lower = 0.0;
  double bracket_upper = 0.0;
  double drho_rho_plus_lower = 0.0;
  double drho_rho_plus_upper = 0.0;
  double pressure_lower = 0.0;
  double pressure_upper = 0.0;
  double dn_rho_plus_lower = 0.0;
  double dn_rho_plus_upper = 0.0;
  double drho_p_lower = 0.0;
  double drho_p_upper = 0.0;
  double dn_p_lower = 0.0;
  double dn_p_upper = 0.0;
  double dnn_p_upper = 0.0;
};

/// Requires rho, n > 0 and the implicit law.
Slacks evaluate_slacks(double rho, double n, const ClosureParams& params);

}  // namespace bounds

}  // namespace bifluid
