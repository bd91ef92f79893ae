#include "savac/potential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace savac {

void PotentialParams::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("potential: gamma must be > 0 so that E_h >= gamma/eps > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("potential: epsilon must be > 0");
}

double F(double s, const PotentialParams& p) {
  const double w = s * s - 1.0;
  return 0.25 * w * w + p.gamma;
}

double F1(double s) { return s * s * s - s; }

double F2(double s) { return 3.0 * s * s - 1.0; }

double rho(double s, const PotentialParams& p) {
  const double scale = 0.5 / std::sqrt(p.epsilon);
  switch (p.rho) {
    case RhoKind::indicator:
      return scale * std::max(1.0 - s * s, 0.0);
    case RhoKind::smooth:
      return scale / (1.0 + s * s);
  }
  return 0.0;
}

double energy_Eh(const FieldVector& phi, const LumpedMass& mass, const PotentialParams& p) {
  if (phi.size() != mass.diag.size()) throw std::invalid_argument("energy_Eh: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) sum += mass.diag[i] * F(phi[i], p);
  return sum / p.epsilon;
}

double energy_total(const FieldVector& phi, double r, const StiffnessMatrix& stiff, const PotentialParams& p) {
  return 0.5 * p.epsilon * h1_seminorm_sq(phi, stiff) + r * r;
}

}  // namespace savac
