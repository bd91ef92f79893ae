#include "savac/sav.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace savac {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::vector<double> lumped_rhs(const SavState& state, const StepCoefficients& coeffs, const LumpedMass& mass) {
  std::vector<double> rhs(state.phi.size());
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = mass.diag[i] * (state.phi[i] + coeffs.n_vec[i]);
  return rhs;
}

void check_step_inputs(const SavState& state, const StepCoefficients& coeffs, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("sav step: tau must be positive");
  if (coeffs.c.size() != state.phi.size() || coeffs.n_vec.size() != state.phi.size()) {
    throw std::invalid_argument("sav step: coefficients do not match the state");
  }
  if (!std::isfinite(state.r)) throw std::invalid_argument("sav step: r is not finite");
}

SavState next_state(const SavState& state, double tau) {
  SavState next;
  next.step = state.step + 1;
  next.time = static_cast<double>(next.step) * tau;
  return next;
}

// Eberly's bisection for the distance from (y0, y1), y0, y1 >= 0, to the
// ellipse with semi-axes e0 >= e1.
double distance_to_ellipse(double e0, double e1, double y0, double y1) {
  if (y1 > 0.0) {
    if (y0 > 0.0) {
      const double z0 = y0 / e0;
      const double z1 = y1 / e1;
      double g = z0 * z0 + z1 * z1 - 1.0;
      if (g == 0.0) return 0.0;
      const double r0 = (e0 / e1) * (e0 / e1);
      const double n0 = r0 * z0;
      double s0 = z1 - 1.0;
      double s1 = g < 0.0 ? 0.0 : std::hypot(n0, z1) - 1.0;
      double s = 0.0;
      for (int it = 0; it < 1100; ++it) {
        s = 0.5 * (s0 + s1);
        if (s == s0 || s == s1) break;
        const double ratio0 = n0 / (s + r0);
        const double ratio1 = z1 / (s + 1.0);
        g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if (g > 0.0) {
          s0 = s;
        } else if (g < 0.0) {
          s1 = s;
        } else {
          break;
        }
      }
      const double x0 = r0 * y0 / (s + r0);
      const double x1 = y1 / (s + 1.0);
      return std::hypot(x0 - y0, x1 - y1);
    }
    return std::abs(y1 - e1);
  }
  const double numer0 = e0 * y0;
  const double denom0 = e0 * e0 - e1 * e1;
  if (numer0 < denom0) {
    const double xde0 = numer0 / denom0;
    const double x0 = e0 * xde0;
    const double x1 = e1 * std::sqrt(1.0 - xde0 * xde0);
    return std::hypot(x0 - y0, x1);
  }
  return std::abs(y0 - e0);
}

double periodic_offset(double x, double c) {
  double d = x - c;
  d -= std::round(d);
  return d;
}

}  // namespace

SavState initial_state(FieldVector phi0, const LumpedMass& mass, const PotentialParams& params) {
  SavState s;
  s.r = std::sqrt(energy_Eh(phi0, mass, params));
  s.phi = std::move(phi0);
  return s;
}

StepCoefficients compute_coefficients(const FieldVector& phi_prev, const FieldVector& n_vec,
                                      const LumpedMass& mass, const PotentialParams& params) {
  if (!phi_prev.same_shape(n_vec) || phi_prev.size() != mass.diag.size()) {
    throw std::invalid_argument("compute_coefficients: shape mismatch");
  }
  if (!all_finite(phi_prev.span()) || !all_finite(n_vec.span())) {
    throw std::invalid_argument("compute_coefficients: non-finite input");
  }
  const double inv_eps = 1.0 / params.epsilon;
  const std::size_t n = phi_prev.size();

  StepCoefficients co;
  co.E = energy_Eh(phi_prev, mass, params);
  if (!(co.E > 0.0) || !std::isfinite(co.E)) throw std::invalid_argument("compute_coefficients: E_h must be positive");
  co.n_vec = n_vec;

  std::vector<double> g1(n);
  for (std::size_t j = 0; j < n; ++j) g1[j] = inv_eps * F1(phi_prev[j]);
  for (std::size_t j = 0; j < n; ++j) co.a += mass.diag[j] * g1[j] * n_vec[j];

  const double sqrt_e = std::sqrt(co.E);
  const double k1 = co.a / (4.0 * co.E * sqrt_e);
  const double k2 = 1.0 / (2.0 * sqrt_e);
  co.xi = phi_prev;
  co.c.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    co.xi[j] = -k1 * g1[j] + k2 * inv_eps * F2(phi_prev[j]) * n_vec[j];
    co.c[j] = mass.diag[j] * (g1[j] / sqrt_e + co.xi[j]);
  }
  return co;
}

SavScheme::SavScheme(const Discretization& disc, double tau, PotentialParams params, SolverOptions opts)
    : disc_(&disc), tau_(tau), params_(params), opts_(opts) {
  if (!(tau > 0.0)) throw std::invalid_argument("sav scheme: tau must be positive");
  params_.validate();
  opts_.validate();
  system_ = disc.stiffness.shifted(disc.mass.diag, tau * params.epsilon);
}

SavState SavScheme::step(const SavState& state, const StepCoefficients& coeffs, StepReport* report) {
  check_step_inputs(state, coeffs, tau_);
  const std::size_t n = state.phi.size();
  if (y0_.size() != n) {
    y0_ = state.phi.values;
    y1_.assign(n, 0.0);
  }

  const auto rhs = lumped_rhs(state, coeffs, disc_->mass);
  auto sol0 = cg_solve(system_, rhs, y0_, opts_);
  auto sol1 = cg_solve(system_, coeffs.c, y1_, opts_);
  y0_ = std::move(sol0.x);
  y1_ = std::move(sol1.x);

  double c_dphi = 0.0;
  double c_y1 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    c_dphi += 0.5 * coeffs.c[j] * (y0_[j] - state.phi[j]);
    c_y1 += 0.5 * coeffs.c[j] * y1_[j];
  }
  const double denom = 1.0 + tau_ * c_y1;
  if (report) {
    report->cg_iterations = sol0.iterations + sol1.iterations;
    report->denominator = denom;
  }
  if (std::abs(denom) < kSingularStepThreshold) {
    std::ostringstream msg;
    msg << "sav step: singular scalar elimination (denominator " << denom << ")";
    throw SingularStepError(msg.str());
  }

  SavState next = next_state(state, tau_);
  next.r = (state.r + c_dphi) / denom;
  next.phi = state.phi;
  for (std::size_t j = 0; j < n; ++j) next.phi[j] = y0_[j] - tau_ * next.r * y1_[j];
  return next;
}

SavState sav_step(const SavState& state, const StepCoefficients& coeffs, const LumpedMass& mass,
                  const StiffnessMatrix& stiff, double tau, const PotentialParams& params,
                  const SolverOptions& opts) {
  // Only the operators are needed; the mesh is a placeholder.
  Discretization disc{TorusMesh{}, mass, stiff};
  SavScheme scheme(disc, tau, params, opts);
  return scheme.step(state, coeffs);
}

SavState dense_oracle_step(const SavState& state, const StepCoefficients& coeffs, const LumpedMass& mass,
                           const StiffnessMatrix& stiff, double tau, const PotentialParams& params) {
  check_step_inputs(state, coeffs, tau);
  const std::size_t n = state.phi.size();
  if (n > 4096) throw std::invalid_argument("dense oracle: more than 4096 nodes");
  const auto dim = static_cast<Eigen::Index>(n + 1);

  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs(dim);
  const auto offsets = stiff.row_offsets();
  const auto cols = stiff.column_indices();
  const auto vals = stiff.values();
  double r_rhs = state.r;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    sys(row, row) += mass.diag[i];
    for (std::size_t k = offsets[i]; k < offsets[i + 1]; ++k) {
      sys(row, static_cast<Eigen::Index>(cols[k])) += tau * params.epsilon * vals[k];
    }
    sys(row, dim - 1) = tau * coeffs.c[i];
    rhs(row) = mass.diag[i] * (state.phi[i] + coeffs.n_vec[i]);
    sys(dim - 1, row) = -0.5 * coeffs.c[i];
    r_rhs -= 0.5 * coeffs.c[i] * state.phi[i];
  }
  sys(dim - 1, dim - 1) = 1.0;
  rhs(dim - 1) = r_rhs;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
  if (!lu.isInvertible()) throw SingularStepError("dense oracle: coupled system is singular");
  const Eigen::VectorXd sol = lu.solve(rhs);

  SavState next = next_state(state, tau);
  next.phi = state.phi;
  for (std::size_t i = 0; i < n; ++i) next.phi[i] = sol(static_cast<Eigen::Index>(i));
  next.r = sol(dim - 1);
  return next;
}

double signed_distance_ellipse(const Point& p, const Point& center, const Point& semi_axes, int dim) {
  const double dx = std::abs(periodic_offset(p[0], center[0]));
  if (dim == 1) return semi_axes[0] - dx;
  const double dy = std::abs(periodic_offset(p[1], center[1]));
  const bool inside = (dx / semi_axes[0]) * (dx / semi_axes[0]) + (dy / semi_axes[1]) * (dy / semi_axes[1]) < 1.0;
  const double dist = semi_axes[0] >= semi_axes[1] ? distance_to_ellipse(semi_axes[0], semi_axes[1], dx, dy)
                                                   : distance_to_ellipse(semi_axes[1], semi_axes[0], dy, dx);
  return inside ? dist : -dist;
}

double initial_value(const InitialCondition& ic, const Point& p, int dim, double epsilon) {
  switch (ic.kind) {
    case InitialKind::constant:
      return ic.value;
    case InitialKind::cosine: {
      const double w = 2.0 * std::numbers::pi * ic.wavenumber;
      const double v = ic.value * std::cos(w * p[0]);
      return dim == 1 ? v : v * std::cos(w * p[1]);
    }
    case InitialKind::tanh_ellipse:
      return std::tanh(signed_distance_ellipse(p, ic.center, ic.semi_axes, dim) / (std::numbers::sqrt2 * epsilon));
  }
  return 0.0;
}

FieldVector initial_field(const InitialCondition& ic, const TorusMesh& mesh, double epsilon) {
  return nodal_interpolate([&](const Point& p) { return initial_value(ic, p, mesh.dim(), epsilon); }, mesh);
}

StepDiagnostics diagnose(const SavState& state, const Discretization& disc, const PotentialParams& params,
                         std::size_t cg_iterations) {
  StepDiagnostics d;
  d.step = state.step;
  d.time = state.time;
  d.r = state.r;
  d.sqrt_eh = std::sqrt(energy_Eh(state.phi, disc.mass, params));
  d.e_sav = energy_total(state.phi, state.r, disc.stiffness, params);
  for (const double v : state.phi.values) d.max_abs_phi = std::max(d.max_abs_phi, std::abs(v));
  d.cg_iterations = cg_iterations;
  return d;
}

PathRunner::PathRunner(SavScheme& scheme, const ModeBasis& basis, const NoisePath& path, const FieldVector& phi0)
    : scheme_(&scheme), basis_(&basis), path_(&path) {
  const auto& disc = scheme.discretization();
  if (phi0.size() != disc.mass.diag.size() || basis.node_count() != phi0.size()) {
    throw std::invalid_argument("path runner: initial field, basis and mesh sizes differ");
  }
  if (path.modes != basis.mode_count()) throw std::invalid_argument("path runner: noise path has wrong mode count");
  if (std::abs(path.tau - scheme.tau()) > 1e-12 * scheme.tau()) {
    throw std::invalid_argument("path runner: noise path step differs from the scheme time step");
  }
  state_ = initial_state(phi0, disc.mass, scheme.params());
  diag_ = diagnose(state_, disc, scheme.params());
  max_tracking_ = std::abs(diag_.tracking_error());
}

void PathRunner::advance() {
  const std::size_t n = state_.step + 1;
  if (n > path_->steps) throw PathError("path runner: noise path exhausted", n);
  try {
    const FieldVector w = noise_field(*basis_, *path_, n - 1, n);
    for (const double inc : path_->step_increments(n - 1)) consumed_sum_ += inc;
    const FieldVector n_vec = apply_phi_h(state_.phi, w, scheme_->params());
    const auto coeffs = compute_coefficients(state_.phi, n_vec, scheme_->discretization().mass, scheme_->params());
    StepReport report;
    state_ = scheme_->step(state_, coeffs, &report);
    diag_ = diagnose(state_, scheme_->discretization(), scheme_->params(), report.cg_iterations);
    max_tracking_ = std::max(max_tracking_, std::abs(diag_.tracking_error()));
  } catch (const PathError&) {
    throw;
  } catch (const std::exception& e) {
    throw PathError(std::string(e.what()) + " at step " + std::to_string(n), n);
  }
}

PathResult run_path(SavScheme& scheme, const ModeBasis& basis, const NoisePath& path, const FieldVector& phi0,
                    const PathOptions& opts, const StepObserver& observer) {
  PathRunner runner(scheme, basis, path, phi0);
  PathResult result;
  result.diagnostics.reserve(path.steps + 1);
  auto record = [&] {
    const auto& s = runner.state();
    result.diagnostics.push_back(runner.diagnostics());
    if (opts.keep_stride > 0 && s.step % opts.keep_stride == 0) result.states.push_back(s);
    if (observer) observer(s, runner.diagnostics());
  };
  record();
  while (!runner.done()) {
    runner.advance();
    record();
  }
  result.max_tracking_error = runner.max_tracking_error();
  result.consumed_increment_sum = runner.consumed_increment_sum();
  return result;
}

}  // namespace savac
