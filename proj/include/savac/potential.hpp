#pragma once

#include "savac/fem.hpp"

namespace savac {

enum class RhoKind {
  /// (2 sqrt(eps))^{-1} max(1 - s^2, 0): active only in the diffuse interface.
  indicator,
  /// (2 sqrt(eps))^{-1} (1 + s^2)^{-1}: smooth with bounded derivatives.
  smooth,
};

struct PotentialParams {
  double gamma = 1e-5;
  double epsilon = 0.02;
  RhoKind rho = RhoKind::indicator;

  /// Throws std::invalid_argument unless gamma > 0 and epsilon > 0.
  void validate() const;

  friend bool operator==(const PotentialParams&, const PotentialParams&) = default;
};

// Shifted double well F(s) = (s^2 - 1)^2 / 4 + gamma and its derivatives.
double F(double s, const PotentialParams& p);
double F1(double s);
double F2(double s);

/// Noise coefficient rho(s).
double rho(double s, const PotentialParams& p);

/// E_h(phi) = eps^{-1} sum_i m_i F(phi_i). Bounded below by gamma / eps.
double energy_Eh(const FieldVector& phi, const LumpedMass& mass, const PotentialParams& p);

/// Modified energy (eps/2) phi^T K phi + r^2, the Lyapunov functional of the
/// deterministic scheme.
double energy_total(const FieldVector& phi, double r, const StiffnessMatrix& stiff, const PotentialParams& p);

}  // namespace savac
