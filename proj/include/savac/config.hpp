#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "savac/linalg.hpp"
#include "savac/mc.hpp"
#include "savac/noise.hpp"
#include "savac/potential.hpp"
#include "savac/sav.hpp"

namespace savac {

/// All run parameters. Parsed from a sectioned key=value file:
///
///   [model]      dim, epsilon, gamma, rho (indicator | smooth)
///   [noise]      enabled, seed, mode = k lambda (1-D) | k l lambda (2-D), repeatable
///   [mesh]       level
///   [time]       final_time, tau
///   [initial]    kind (constant | cosine | tanh-ellipse), value, wavenumber,
///                center = x y, semi_axes = a b
///   [solver]     rel_tolerance, max_iterations, preconditioner (none | diagonal)
///   [experiment] reference_level, reference_tau, entry = level tau (repeatable),
///                compare_tau, samples, workers
///   [rtrack]     level, tau (repeatable)
///   [output]     dir, dump_stride, log_stride
///
/// Without `mode` rows the default spectrum of NoiseModel::default_modes is
/// used. Without `entry` rows the ladder is levels 5, 6, 7 with tau = h^2.
struct RunConfig {
  PotentialParams potential;
  int dim = 1;

  bool noise_enabled = true;
  std::uint64_t seed = 1;
  std::vector<ModeSpec> modes;

  int level = 7;
  double final_time = 0.25;
  double tau = 0x1.0p-14;

  InitialCondition initial;
  SolverOptions solver;

  int reference_level = 9;
  double reference_tau = 0x1.0p-16;
  std::vector<LadderEntry> ladder;
  double compare_tau = 0.0;
  std::size_t samples = 100;
  std::size_t workers = 1;

  int rtrack_level = 7;
  std::vector<double> rtrack_taus;

  std::string output_dir;
  std::size_t dump_stride = 0;
  std::size_t log_stride = 1;

  /// Modes actually driving the simulation (empty when noise is disabled).
  std::vector<ModeSpec> active_modes() const { return noise_enabled ? modes : std::vector<ModeSpec>{}; }
  NoiseModel noise_model() const { return {dim, active_modes(), seed}; }
  ExperimentPlan plan() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Carries every problem found in a configuration, one per entry.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Default output directory: $SAV_SPDE_OUT if set, else "out".
std::string default_output_dir();

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);

/// Writes the effective configuration (defaults resolved) in the input format;
/// parse_config_text(emit) == config.
void emit_config(std::ostream& os, const RunConfig& config);

/// Throws ConfigError listing every violated constraint.
void validate_config(const RunConfig& config);

/// Consistency of the ensemble and tracking studies (ladder taus dividing T
/// and the reference tau, levels not above the reference); only needed by
/// the subcommands that run them.
void validate_experiment(const RunConfig& config);

}  // namespace savac
