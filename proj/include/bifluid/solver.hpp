#pragma once

// Time integration of the regularized approximation system: upwind/implicit
// continuity for both densities, induction (potential form in 2D), and the
// Galerkin momentum system. One step is a Lie splitting
// continuity -> induction -> momentum.

#include <map>
#include <memory>
#include <optional>
#include <utility>

#include "bifluid/diagnostics.hpp"
#include "bifluid/model.hpp"

namespace bifluid {

class ImplicitOperator;

class Simulation {
 public:
  explicit Simulation(SimConfig config);
  ~Simulation();
  Simulation(Simulation&&) noexcept;
  Simulation& operator=(Simulation&&) noexcept;

  const SimConfig& config() const { return config_; }
  const GalerkinBasis& basis() const { return basis_; }

  void set_forcing(Forcing forcing) { forcing_ = std::move(forcing); }

  /// Projects u0 = m0 / (rho0 + n0) onto the basis. Does not mollify.
  SimState initial_state(const InitialData& data) const;

  /// Largest dt accepted by the transport CFL bound for the current velocity.
  double max_stable_dt(const SimState& state) const;

  void step_continuity(SimState& state, double dt) const;
  void step_induction(SimState& state, double dt) const;
  void step_momentum(SimState& state, const ScalarField& rho_old,
                     const ScalarField& n_old, double dt) const;

  /// One full step; throws CflError (state untouched) when dt is too large.
  EnergyLedger step(SimState& state, double dt) const;

  /// Advances to `t_end` with the configured dt, sub-cycling deterministically
  /// whenever the CFL bound rejects a step. `on_step` sees every ledger.
  void advance(SimState& state, double t_end,
               const std::function<void(const SimState&, const EnergyLedger&)>& on_step = {})
      const;

 private:
  void check_cfl(const SimState& state, double dt) const;
  const ImplicitOperator& implicit(Boundary bc, double coef) const;

  SimConfig config_;
  GalerkinBasis basis_;
  Forcing forcing_;
  mutable std::map<std::pair<int, double>, std::unique_ptr<ImplicitOperator>> cache_;
};

/// Regularizes raw data into the class used by the approximation: densities
/// clamped to [delta, delta^{-1/(2B)}], velocity m0/sqrt(rho0+n0) smoothed by
/// a mollifier of radius delta, cut off near the walls and divided by
/// sqrt(rho_delta + n_delta). Throws DomainError when the raw densities
/// violate n0 <= c0 rho0, rho0 <= c0 n0.
InitialData mollify_initial_data(const InitialData& raw, double delta, double big_b,
                                 double c0);

/// Smallest c0 >= 1 for which the data lies in the ratio set, or +inf.
double ratio_bound(const ScalarField& rho, const ScalarField& n);

}  // namespace bifluid
