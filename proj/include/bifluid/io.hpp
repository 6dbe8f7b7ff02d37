#pragma once

// Run configuration files, initial-data profiles, checkpoints and report
// output.
//
// Config files are flat, one typed entry per line:
//
//     # comment
//     gamma_plus: real = 2
//     profile: string = cosine-bump
//     sweep_values: reals = 1e-2, 5e-3, 2.5e-3
//
// Types are real, int, string and reals. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "bifluid/harness.hpp"

namespace bifluid {

struct RunConfig {
  SimConfig sim;
  bool c0_given = false;
  bool b_given = false;

  std::string profile = "cosine-bump";  // uniform, cosine-bump, proportional-pair, vacuum-region
  double amplitude = 0.4;
  double ratio = 2.0;           // rho / n for proportional-pair
  double perturbation = 0.0;    // relative sine perturbation of the ratio
  double velocity = 0.1;
  double magnetic = 0.1;
  bool mollify = false;

  SweepAxis sweep_axis = SweepAxis::Epsilon;
  std::vector<double> sweep_values{1e-2, 5e-3, 2.5e-3};
  int snapshots = 32;
  double energy_tolerance = 1.0;

  std::string verify_case = "coupled";
  int audit_samples = 10000;
  std::vector<double> audit_pairs{2.0, 2.0, 3.0, 1.5, 1.8, 1.8, 1.0, 1.8};
};

/// Throws ParseError (with line number) or ValidationError.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical `key: type = value` rendering of every setting.
std::string canonical_config(const RunConfig& config);
std::uint64_t fnv1a64(const std::string& text);
std::string config_hash(const RunConfig& config);

/// Initial data of the configured profile on `sim.grid`, before mollification.
InitialData make_initial_data(const RunConfig& config, const SimConfig& sim);

/// Applies the default c0 (from the data) and optional mollification.
InitialData prepare_initial_data(RunConfig& config);

void write_checkpoint(std::ostream& out, const SimState& state);
SimState read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const SimState& state);
SimState load_checkpoint(const std::filesystem::path& path);

/// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string format_real(double v);

void write_manifest(const std::filesystem::path& dir, const RunConfig& config,
                    const std::string& command, const std::vector<std::string>& files);

std::string invariants_csv(const std::vector<InvariantResult>& invariants);
std::string sweep_members_csv(const SweepReport& report);
std::string convergence_csv(const ConvergenceTable& table);
std::string audit_csv(const std::vector<AuditReport>& reports);

}  // namespace bifluid
