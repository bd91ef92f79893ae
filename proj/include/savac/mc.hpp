#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "savac/linalg.hpp"
#include "savac/noise.hpp"
#include "savac/potential.hpp"
#include "savac/sav.hpp"

namespace savac {

struct LadderEntry {
  int level = 5;
  double tau = 0.0;

  friend bool operator==(const LadderEntry&, const LadderEntry&) = default;
};

/// Everything one Monte Carlo study needs: the model, the discretization
/// ladder, the fine reference and the sampling parameters.
struct ExperimentPlan {
  int dim = 1;
  std::vector<LadderEntry> ladder;
  LadderEntry reference{9, 0.0};
  /// Time spacing of the comparison grid; 0 selects the coarsest ladder tau.
  double compare_tau = 0.0;
  std::size_t samples = 100;
  std::uint64_t master_seed = 0;
  double final_time = 0.25;
  std::size_t workers = 1;

  PotentialParams potential;
  std::vector<ModeSpec> modes;
  InitialCondition initial;
  SolverOptions solver;

  NoiseModel noise_model() const { return {dim, modes, master_seed}; }
  double comparison_tau() const;

  /// Throws std::invalid_argument listing every violated constraint: each tau
  /// an integer multiple of the reference tau, T / tau integral, levels not
  /// above the reference level, and so on.
  void validate() const;
};

/// Number of steps of length `tau` in [0, T]; throws unless T / tau is an
/// integer up to a relative 1e-9.
std::size_t step_count(double final_time, double tau);

/// Integer ratio coarse / fine; throws unless it is one up to a relative 1e-9.
std::size_t integer_ratio(double coarse, double fine);

struct ErrorRow {
  LadderEntry entry;
  double h = 0.0;
  double e_l2 = 0.0;
  double e_h1 = 0.0;
  double e_tot = 0.0;
  /// Order in tau against the next finer row, log(E / E_finer) / log(tau / tau_finer);
  /// equal to log2(E / E_finer) when tau doubles. NaN on the finest row.
  double eoc_l2 = 0.0;
  double eoc_h1 = 0.0;
  double eoc_tot = 0.0;
  /// Sample means of ||e||_{L2}^2 and |e|_{H1}^2 at each comparison time.
  std::vector<double> mean_l2_sq;
  std::vector<double> mean_semi_sq;
};

struct ErrorReport {
  /// Finest tau first.
  std::vector<ErrorRow> rows;
  std::size_t samples = 0;
  int compare_level = 0;
  double compare_tau = 0.0;
  std::vector<double> compare_times;
  /// Every run of every sample consumed the same total increment as the
  /// reference (sum over all modes and steps, up to 1e-10 relative).
  bool common_path_verified = false;
};

/// Strong errors of every ladder entry against the reference solution driven
/// by coarsenings of the same Brownian increments.
///
///   E_L2 = (max_n  mean_S ||phi_h(t_n) - phi_ref(t_n)||_{L2}^2)^{1/2}
///   E_H1 = (tau~ sum_n mean_S ||phi_h(t_n) - phi_ref(t_n)||_{H1}^2)^{1/2}
///
/// over the comparison times t_n = n tau~, n = 1..T/tau~. Coarse fields are
/// prolonged to the reference mesh; norms use its lumped mass and stiffness.
/// Samples run on `plan.workers` threads and are reduced in ascending
/// sample order.
ErrorReport run_ensemble(const ExperimentPlan& plan);

/// EOC_i = log2(e_{i+1} / e_i) for errors ordered finest first.
std::vector<double> compute_eoc(std::span<const double> errors);

/// Order with respect to tau for arbitrary ratios:
/// log(e_{i+1} / e_i) / log(tau_{i+1} / tau_i).
std::vector<double> compute_eoc(std::span<const double> errors, std::span<const double> taus);

struct TrackingRow {
  double tau = 0.0;
  double mean_max_tracking_error = 0.0;
  /// Relative to the previous (coarser) row; NaN on the first row.
  double observed_order = 0.0;
};

/// Sample mean of max_n |r^n - sqrt(E_h(phi^n))| at a fixed level for each
/// tau, coarsest first. All runs of one sample share the same increments.
std::vector<TrackingRow> r_tracking_study(const ExperimentPlan& plan, int level, std::vector<double> taus);

/// Header: level,h,tau,E_L2,EOC_L2,E_H1,EOC_H1,E_tot,EOC_tot,samples
void write_eoc_csv(std::ostream& os, const ErrorReport& report);
/// Header: level,tau,time,mean_L2_sq,mean_H1_sq
void write_mc_csv(std::ostream& os, const ErrorReport& report);
/// Header: tau,mean_max_tracking_error,observed_order
void write_rtrack_csv(std::ostream& os, std::span<const TrackingRow> rows);

}  // namespace savac
