#pragma once

// Parameter sweeps, manufactured-solution verification and closure audits.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bifluid/diagnostics.hpp"
#include "bifluid/solver.hpp"

namespace bifluid {

enum class SweepAxis { Modes, Epsilon, Delta };

const char* axis_name(SweepAxis axis);

struct SweepPlan {
  SimConfig base;
  SweepAxis axis = SweepAxis::Epsilon;
  std::vector<double> values;
  int snapshots = 32;
  /// Allowed energy overshoot at eps = 0, relative to max(1, E(0)) and per
  /// unit time step.
  double energy_tolerance = 1.0;

  /// Throws ValidationError unless >= 3 strictly monotone values are given
  /// (decreasing for Epsilon/Delta, increasing for Modes).
  void validate() const;
  SimConfig member_config(std::size_t i) const;
};

struct InvariantResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;  // worst observed residual (meaning depends on the check)
};

/// Runs `config` from `initial` (used as given) and stores `snapshots`+1
/// evenly spaced states including t = 0 and t_end, plus every ledger.
Trajectory run_trajectory(const SimConfig& config, const InitialData& initial,
                          double parameter, int snapshots, const Forcing& forcing = {});

/// Mass, ratio, positivity, solenoidal and energy-inequality checks.
std::vector<InvariantResult> check_invariants(const Trajectory& trajectory,
                                              double energy_tolerance = 1.0);

/// Largest relative energy overshoot max_m [E(t_m) + int D - E(0)]_+ / max(1, E(0)).
double energy_overshoot(const std::vector<EnergyLedger>& ledgers);

struct MemberReport {
  double parameter = 0.0;
  EnergyLedger final_ledger;
  std::vector<InvariantResult> invariants;
  double growth_constant = 0.0;
};

struct SweepReport {
  std::string axis;
  std::vector<double> values;
  std::vector<MemberReport> members;
  DefectReport defects;
  std::vector<double> successive_distances;
  std::vector<Trajectory> trajectories;
  bool invariants_passed = false;
  double wall_seconds = 0.0;
  std::string error;  // set when a member failed; the report is then partial
};

using InitialFactory = std::function<InitialData(const SimConfig&)>;

/// Members run concurrently; results are assembled in plan order.
SweepReport run_sweep(const SweepPlan& plan, const InitialFactory& raw_data);

/// max over snapshots of the L^2 distance between two trajectories of (rho, n, u, H).
double trajectory_distance(const Trajectory& a, const Trajectory& b);

struct ConvergenceRow {
  int cells = 0;
  double dt = 0.0;
  std::vector<double> errors;  // one per field
  double error = 0.0;          // sum of the field errors
};

struct ConvergenceTable {
  std::string case_id;
  std::vector<std::string> fields;
  std::vector<ConvergenceRow> rows;
  std::vector<double> orders;  // between successive rows, of the summed error
  double observed_order = 0.0; // smallest of `orders`
  double seconds = 0.0;
};

/// Cases: "diffusion" (u = 0 heat solution), "coupled" (forced 1D solution of
/// the full system), "temporal" (dt self-convergence on a fixed grid).
/// Throws DomainError for other ids.
ConvergenceTable verify_manufactured(const SimConfig& config, const std::string& case_id);

struct AuditPlan {
  int samples = 10000;
  double max_density = 10.0;
  std::uint64_t seed = 20240501;
  bool derivatives = true;
  bool euler = true;
  int euler_samples = 10000;  // first n random samples used for the Euler identity
  int monotone_points = 500;
  int monotone_slopes = 20;
  int ratio_grid = 0;         // extra points per axis of a grid over the ratio set
};

struct AuditRow {
  std::string name;
  double worst = 0.0;       // normalized slack
  long count = 0;
  double threshold = -1e-10;  // passes when worst >= threshold
};

struct AuditReport {
  ClosureParams params;
  std::vector<AuditRow> rows;
  double seconds = 0.0;
  bool passed() const;
  const AuditRow* find(const std::string& name) const;
};

AuditReport closure_audit(const ClosureParams& params, const AuditPlan& plan);

}  // namespace bifluid
