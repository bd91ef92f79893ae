#include "savac/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "savac/fem.hpp"
#include "savac/noise.hpp"
#include "savac/potential.hpp"
#include "savac/sav.hpp"

namespace savac {

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

struct Instance {
  SavState state;
  StepCoefficients coeffs;
  double tau = 0.0;
};

Instance random_instance(const Discretization& disc, const PotentialParams& params, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> log_tau(std::log(1e-5), std::log(1e-2));
  Instance in;
  in.tau = std::exp(log_tau(rng));
  FieldVector phi = disc.mesh.make_field();
  FieldVector w = disc.mesh.make_field();
  for (std::size_t i = 0; i < phi.size(); ++i) {
    phi[i] = u(rng);
    w[i] = std::sqrt(in.tau) * g(rng);
  }
  in.state = initial_state(phi, disc.mass, params);
  in.state.r *= 1.0 + 0.1 * u(rng);
  in.coeffs = compute_coefficients(in.state.phi, apply_phi_h(in.state.phi, w, params), disc.mass, params);
  return in;
}

double rel_diff(const FieldVector& a, const FieldVector& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / std::max(den, 1e-300));
}

CheckResult oracle_check(int dim, int count, std::mt19937_64& rng) {
  const PotentialParams params{1e-5, 0.02, RhoKind::indicator};
  const Discretization disc = discretize(dim, 3);
  SolverOptions opts;
  opts.rel_tolerance = 1e-13;
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const auto in = random_instance(disc, params, rng);
    const auto fast = sav_step(in.state, in.coeffs, disc.mass, disc.stiffness, in.tau, params, opts);
    const auto dense = dense_oracle_step(in.state, in.coeffs, disc.mass, disc.stiffness, in.tau, params);
    worst = std::max({worst, rel_diff(fast.phi, dense.phi), std::abs(fast.r - dense.r) / std::abs(dense.r)});
  }
  return {"dense oracle " + std::to_string(dim) + "-D level 3 (" + std::to_string(count) + " instances)",
          worst <= 1e-10, "max relative difference " + sci(worst)};
}

CheckResult reduction_check(std::mt19937_64& rng) {
  const PotentialParams params{1e-5, 0.02, RhoKind::indicator};
  const Discretization disc = discretize(1, 4);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto in = random_instance(disc, params, rng);
    const auto& phi = in.state.phi;
    const auto& n = in.coeffs.n_vec;
    const double E = energy_Eh(phi, disc.mass, params);
    double a = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) a += disc.mass.diag[j] * F1(phi[j]) / params.epsilon * n[j];
    for (std::size_t j = 0; j < phi.size(); ++j) {
      const double m = disc.mass.diag[j];
      const double g1 = F1(phi[j]) / params.epsilon;
      const double g2 = F2(phi[j]) / params.epsilon;
      // Coefficient of (phi^n_j - phi^{n-1}_j) in the r update, term by term.
      const double d = m * g1 / (2.0 * std::sqrt(E)) - a / (8.0 * std::pow(E, 1.5)) * m * g1 +
                       m * g2 * n[j] / (4.0 * std::sqrt(E));
      const double half_c = 0.5 * in.coeffs.c[j];
      worst = std::max(worst, std::abs(d - half_c) / std::max(std::abs(d), 1e-300));
    }
  }
  return {"r-update coefficients equal half the phi-equation coefficients", worst <= 1e-14,
          "max relative difference " + sci(worst)};
}

CheckResult energy_check() {
  const PotentialParams params{1e-5, 0.02, RhoKind::indicator};
  const Discretization disc = discretize(2, 4);
  const double tau = 1e-3;
  SavScheme scheme(disc, tau, params);
  SavState s = initial_state(initial_field(InitialCondition{}, disc.mesh, params.epsilon), disc.mass, params);
  const FieldVector zero = disc.mesh.make_field();
  double worst_increase = -1e300;
  double prev = energy_total(s.phi, s.r, disc.stiffness, params);
  for (int n = 0; n < 50; ++n) {
    s = scheme.step(s, compute_coefficients(s.phi, zero, disc.mass, params));
    const double e = energy_total(s.phi, s.r, disc.stiffness, params);
    worst_increase = std::max(worst_increase, e - prev);
    prev = e;
  }
  return {"zero-noise modified energy non-increasing (2-D level 4, 50 steps)", worst_increase <= 1e-12,
          "largest one-step change " + sci(worst_increase)};
}

CheckResult fixed_point_check() {
  const PotentialParams params{1e-5, 0.02, RhoKind::indicator};
  const Discretization disc = discretize(2, 3);
  const FieldVector zero = disc.mesh.make_field();
  double worst = 0.0;
  for (const double v : {1.0, -1.0}) {
    SavScheme scheme(disc, 1e-3, params);
    SavState s = initial_state(disc.mesh.make_field(v), disc.mass, params);
    const double r0 = s.r;
    for (int n = 0; n < 100; ++n) s = scheme.step(s, compute_coefficients(s.phi, zero, disc.mass, params));
    for (const double x : s.phi.values) worst = std::max(worst, std::abs(x - v));
    worst = std::max(worst, std::abs(s.r - r0));
  }
  return {"pure phases +-1 stationary without noise (100 steps)", worst <= 1e-10, "max deviation " + sci(worst)};
}

CheckResult ibp_check(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (const int dim : {1, 2}) {
    const Discretization disc = discretize(dim, 4);
    FieldVector f = disc.mesh.make_field();
    FieldVector g = disc.mesh.make_field();
    for (std::size_t i = 0; i < f.size(); ++i) {
      f[i] = u(rng);
      g[i] = u(rng);
    }
    const double lhs = lumped_inner(discrete_laplacian(f, disc.mass, disc.stiffness), g, disc.mass);
    const auto kg = disc.stiffness.apply(g.span());
    double rhs = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) rhs -= f[i] * kg[i];
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
  }
  return {"discrete integration by parts", worst <= 1e-12, "max relative difference " + sci(worst)};
}

CheckResult coarsening_check() {
  NoiseModel model{1, NoiseModel::default_modes(1), 7};
  const auto fine = generate_increments(model, 3, 1024, 1e-5);
  double worst = 0.0;
  for (const std::size_t factor : {2u, 8u, 64u}) {
    const auto coarse = coarsen(fine, factor);
    for (std::size_t s = 0; s < coarse.steps; ++s) {
      for (std::size_t m = 0; m < coarse.modes; ++m) {
        double sum = 0.0;
        for (std::size_t f = s * factor; f < (s + 1) * factor; ++f) sum += fine.increment(f, m);
        worst = std::max(worst, std::abs(sum - coarse.increment(s, m)));
      }
    }
  }
  return {"coarsened increments are sums of fine increments", worst == 0.0, "max difference " + sci(worst)};
}

}  // namespace

std::vector<CheckResult> run_self_checks(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  auto guarded = [&](auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({"(check aborted)", false, e.what()});
    }
  };
  guarded([&] { return oracle_check(1, 50, rng); });
  guarded([&] { return oracle_check(2, 10, rng); });
  guarded([&] { return reduction_check(rng); });
  guarded([&] { return energy_check(); });
  guarded([&] { return fixed_point_check(); });
  guarded([&] { return ibp_check(rng); });
  guarded([&] { return coarsening_check(); });
  return out;
}

}  // namespace savac
