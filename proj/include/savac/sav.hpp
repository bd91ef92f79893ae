#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "savac/fem.hpp"
#include "savac/linalg.hpp"
#include "savac/noise.hpp"
#include "savac/potential.hpp"

namespace savac {

/// Unknowns of the augmented SAV scheme after `step` steps.
struct SavState {
  FieldVector phi;
  double r = 0.0;
  std::size_t step = 0;
  double time = 0.0;
};

/// phi^0 = I_h[u0] with r^0 = sqrt(E_h(phi^0)).
SavState initial_state(FieldVector phi0, const LumpedMass& mass, const PotentialParams& params);

/// Per-step quantities evaluated at phi^{n-1}. With G = F / eps:
///   E     = E_h(phi^{n-1})
///   a     = sum_j m_j G'(phi_j) n_j
///   xi_j  = -a / (4 E^{3/2}) G'(phi_j) + 1 / (2 sqrt E) G''(phi_j) n_j
///   c_j   = m_j (G'(phi_j) / sqrt E + xi_j)
/// The augmentation field of the phi equation is r^n xi, and the r update
/// reads r^n = r^{n-1} + (c/2) . (phi^n - phi^{n-1}).
struct StepCoefficients {
  double E = 0.0;
  double a = 0.0;
  FieldVector xi;
  std::vector<double> c;
  FieldVector n_vec;
};

/// Throws std::invalid_argument on non-finite inputs or E <= 0.
StepCoefficients compute_coefficients(const FieldVector& phi_prev, const FieldVector& n_vec,
                                      const LumpedMass& mass, const PotentialParams& params);

/// The scalar elimination hit |1 + tau (c/2) . y1| < 1e-12.
class SingularStepError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A failure inside a path, tagged with the step being computed.
class PathError : public std::runtime_error {
 public:
  PathError(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

inline constexpr double kSingularStepThreshold = 1e-12;

struct StepReport {
  std::size_t cg_iterations = 0;
  double denominator = 0.0;
};

/// One step of the augmented SAV scheme at fixed (h, tau). The system matrix
/// A = M_L + tau eps K is assembled once; both CG solves warm-start from the
/// previous step's solutions.
///
/// Given coefficients for phi^{n-1}, the coupled system
///   A phi^n = M_L (phi^{n-1} + n) - tau r^n c
///   r^n     = r^{n-1} + (c/2) . (phi^n - phi^{n-1})
/// is reduced to A y0 = M_L (phi^{n-1} + n), A y1 = c and
///   r^n   = [r^{n-1} + (c/2) . (y0 - phi^{n-1})] / [1 + tau (c/2) . y1],
///   phi^n = y0 - tau r^n y1.
class SavScheme {
 public:
  SavScheme(const Discretization& disc, double tau, PotentialParams params, SolverOptions opts = {});

  SavState step(const SavState& state, const StepCoefficients& coeffs, StepReport* report = nullptr);

  const Discretization& discretization() const { return *disc_; }
  const SparseSymOperator& system() const { return system_; }
  double tau() const { return tau_; }
  const PotentialParams& params() const { return params_; }
  const SolverOptions& solver_options() const { return opts_; }

 private:
  const Discretization* disc_;
  double tau_;
  PotentialParams params_;
  SolverOptions opts_;
  SparseSymOperator system_;
  std::vector<double> y0_;
  std::vector<double> y1_;
};

/// Stand-alone step with cold-started solves.
SavState sav_step(const SavState& state, const StepCoefficients& coeffs, const LumpedMass& mass,
                  const StiffnessMatrix& stiff, double tau, const PotentialParams& params,
                  const SolverOptions& opts = {});

/// Solves the (N+1) x (N+1) coupled system for (phi^n, r^n) by dense LU with
/// full pivoting. Throws std::invalid_argument for more than 4096 nodes and
/// SingularStepError if the matrix is singular.
SavState dense_oracle_step(const SavState& state, const StepCoefficients& coeffs, const LumpedMass& mass,
                           const StiffnessMatrix& stiff, double tau, const PotentialParams& params);

// Initial data ---------------------------------------------------------------

enum class InitialKind { constant, cosine, tanh_ellipse };

struct InitialCondition {
  InitialKind kind = InitialKind::tanh_ellipse;
  /// constant: the value; cosine: the amplitude.
  double value = 1.0;
  int wavenumber = 1;
  Point center{0.5, 0.5};
  Point semi_axes{0.3, 0.18};

  friend bool operator==(const InitialCondition&, const InitialCondition&) = default;
};

/// Signed distance to the ellipse (interval in 1-D), positive inside. The
/// displacement from the center is taken in the periodic minimal image.
double signed_distance_ellipse(const Point& p, const Point& center, const Point& semi_axes, int dim);

/// constant: value; cosine: value cos(2 pi k x) [cos(2 pi k y)];
/// tanh_ellipse: tanh(d(x) / (sqrt2 eps)).
double initial_value(const InitialCondition& ic, const Point& p, int dim, double epsilon);
FieldVector initial_field(const InitialCondition& ic, const TorusMesh& mesh, double epsilon);

// Paths ----------------------------------------------------------------------

struct StepDiagnostics {
  std::size_t step = 0;
  double time = 0.0;
  double r = 0.0;
  double sqrt_eh = 0.0;
  double e_sav = 0.0;
  double max_abs_phi = 0.0;
  std::size_t cg_iterations = 0;

  /// r^n - sqrt(E_h(phi^n)).
  double tracking_error() const { return r - sqrt_eh; }
};

StepDiagnostics diagnose(const SavState& state, const Discretization& disc, const PotentialParams& params,
                         std::size_t cg_iterations = 0);

/// Advances one sample path step by step. Step n consumes exactly the
/// increment with index n - 1 of the noise path.
class PathRunner {
 public:
  PathRunner(SavScheme& scheme, const ModeBasis& basis, const NoisePath& path, const FieldVector& phi0);

  const SavState& state() const { return state_; }
  const StepDiagnostics& diagnostics() const { return diag_; }
  std::size_t steps_available() const { return path_->steps; }
  bool done() const { return state_.step == path_->steps; }

  /// Sum of every increment consumed so far (all modes), for common-path audits.
  double consumed_increment_sum() const { return consumed_sum_; }
  double max_tracking_error() const { return max_tracking_; }

  /// Throws PathError if the path is exhausted or the step fails.
  void advance();

 private:
  SavScheme* scheme_;
  const ModeBasis* basis_;
  const NoisePath* path_;
  SavState state_;
  StepDiagnostics diag_;
  double consumed_sum_ = 0.0;
  double max_tracking_ = 0.0;
};

struct PathOptions {
  /// Keep every k-th state (0 keeps none); the initial state is kept when k > 0.
  std::size_t keep_stride = 1;
};

struct PathResult {
  std::vector<SavState> states;
  std::vector<StepDiagnostics> diagnostics;
  double max_tracking_error = 0.0;
  double consumed_increment_sum = 0.0;
};

using StepObserver = std::function<void(const SavState&, const StepDiagnostics&)>;

/// Runs every step of `path`. Diagnostics are recorded for every step
/// including step 0; the observer sees each state as it is produced.
PathResult run_path(SavScheme& scheme, const ModeBasis& basis, const NoisePath& path, const FieldVector& phi0,
                    const PathOptions& opts = {}, const StepObserver& observer = {});

}  // namespace savac
