#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "savac/fem.hpp"
#include "savac/noise.hpp"
#include "savac/sav.hpp"
#include "test_support.hpp"

using namespace savac;
using testing::random_step;
using testing::rel_l2;

namespace {

SolverOptions tight() {
  SolverOptions o;
  o.rel_tolerance = 1e-13;
  return o;
}

}  // namespace

TEST_SUITE("sav") {
  TEST_CASE("initial state") {
    const auto d = discretize(1, 5);
    const PotentialParams p{};
    const auto phi0 = initial_field(InitialCondition{}, d.mesh, p.epsilon);
    const auto s = initial_state(phi0, d.mass, p);
    CHECK(s.r == std::sqrt(energy_Eh(phi0, d.mass, p)));
    CHECK(s.step == 0);
    CHECK(s.time == 0.0);
  }

  TEST_CASE("coefficients match their definitions") {
    std::mt19937_64 rng(20);
    const auto d = discretize(1, 4);
    const PotentialParams p{1e-5, 0.05};
    const auto in = random_step(d, p, rng);
    const auto& phi = in.state.phi;
    const auto& n = in.coeffs.n_vec;
    const double eps = p.epsilon;
    double e = 0.0, a = 0.0;
    for (std::size_t j = 0; j < phi.size(); ++j) {
      e += d.mass.diag[j] * F(phi[j], p) / eps;
      a += d.mass.diag[j] * F1(phi[j]) / eps * n[j];
    }
    CHECK(in.coeffs.E == doctest::Approx(e).epsilon(1e-14));
    CHECK(in.coeffs.a == doctest::Approx(a).epsilon(1e-12));
    for (std::size_t j = 0; j < phi.size(); ++j) {
      const double xi = -a / (4 * std::pow(e, 1.5)) * F1(phi[j]) / eps + F2(phi[j]) / eps * n[j] / (2 * std::sqrt(e));
      CHECK(in.coeffs.xi[j] == doctest::Approx(xi).epsilon(1e-12).scale(1e-12));
      CHECK(in.coeffs.c[j] == doctest::Approx(d.mass.diag[j] * (F1(phi[j]) / eps / std::sqrt(e) + xi)).epsilon(1e-12).scale(1e-12));
    }
    CHECK(in.coeffs.E >= p.gamma / p.epsilon);
  }

  TEST_CASE("coefficients reject non-finite input") {
    const auto d = discretize(1, 3);
    auto phi = d.mesh.make_field(0.5);
    phi[2] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(compute_coefficients(phi, d.mesh.make_field(), d.mass, PotentialParams{}), std::invalid_argument);
  }

  TEST_CASE("r update coefficient is half the phi-equation coefficient") {
    // Eliminating phi^n from the phi equation and substituting into
    // r^n = r^{n-1} + d.(phi^n - phi^{n-1}) must reproduce the stepper's r^n
    // only for d = c/2: a perturbed d gives a different r.
    std::mt19937_64 rng(21);
    const auto d = discretize(1, 3);
    const PotentialParams p{};
    for (int t = 0; t < 20; ++t) {
      const auto in = random_step(d, p, rng);
      const auto next = sav_step(in.state, in.coeffs, d.mass, d.stiffness, in.tau, p, tight());
      double rhs = in.state.r;
      for (std::size_t j = 0; j < next.phi.size(); ++j) rhs += 0.5 * in.coeffs.c[j] * (next.phi[j] - in.state.phi[j]);
      CHECK(std::abs(next.r - rhs) <= 1e-11 * std::max(1.0, std::abs(next.r)));
    }
  }

  TEST_CASE("stepper agrees with the dense oracle") {
    std::mt19937_64 rng(22);
    const PotentialParams p{};
    for (const int dim : {1, 2}) {
      const auto d = discretize(dim, 3);
      for (int t = 0; t < (dim == 1 ? 50 : 10); ++t) {
        const auto in = random_step(d, p, rng);
        const auto got = sav_step(in.state, in.coeffs, d.mass, d.stiffness, in.tau, p);
        const auto want = dense_oracle_step(in.state, in.coeffs, d.mass, d.stiffness, in.tau, p);
        CHECK(rel_l2(got.phi, want.phi) <= 1e-10);
        CHECK(std::abs(got.r - want.r) <= 1e-10 * std::max(1.0, std::abs(want.r)));
        CHECK(got.step == in.state.step + 1);
        CHECK(got.time == doctest::Approx(in.state.time + in.tau));
      }
    }
  }

  TEST_CASE("the scalar denominator is at least one") {
    std::mt19937_64 rng(23);
    const PotentialParams p{};
    const auto d = discretize(2, 3);
    for (int t = 0; t < 20; ++t) {
      const auto in = random_step(d, p, rng);
      SavScheme scheme(d, in.tau, p);
      StepReport rep;
      (void)scheme.step(in.state, in.coeffs, &rep);
      CHECK(rep.denominator >= 1.0);
    }
  }

  TEST_CASE("output r is affine in the input r") {
    std::mt19937_64 rng(24);
    const auto d = discretize(1, 3);
    const PotentialParams p{};
    const auto in = random_step(d, p, rng);
    auto at = [&](double r) {
      auto s = in.state;
      s.r = r;
      return dense_oracle_step(s, in.coeffs, d.mass, d.stiffness, in.tau, p);
    };
    const double r0 = at(0.0).r, r1 = at(1.0).r, r3 = at(3.0).r;
    CHECK(r3 - r0 == doctest::Approx(3.0 * (r1 - r0)).epsilon(1e-10));
    const auto phi0 = at(0.0).phi, phi1 = at(1.0).phi, phi3 = at(3.0).phi;
    for (std::size_t i = 0; i < phi0.size(); ++i) CHECK(phi3[i] - phi0[i] == doctest::Approx(3.0 * (phi1[i] - phi0[i])).epsilon(1e-9).scale(1e-12));
  }

  TEST_CASE("pure phases are fixed points") {
    const PotentialParams p{};
    for (const int dim : {1, 2}) {
      const auto d = discretize(dim, 3);
      for (const double v : {1.0, -1.0}) {
        auto s = initial_state(d.mesh.make_field(v), d.mass, p);
        SavScheme scheme(d, 1e-3, p);
        for (int n = 0; n < 100; ++n) s = scheme.step(s, compute_coefficients(s.phi, d.mesh.make_field(), d.mass, p));
        for (const double x : s.phi.values) CHECK(std::abs(x - v) <= 1e-10);
        CHECK(s.r == doctest::Approx(std::sqrt(p.gamma / p.epsilon)).epsilon(1e-10));
        // The noise vanishes on pure phases, so noise does not move them either.
        auto noisy = initial_state(d.mesh.make_field(v), d.mass, p);
        const auto w = d.mesh.make_field(0.7);
        noisy = scheme.step(noisy, compute_coefficients(noisy.phi, apply_phi_h(noisy.phi, w, p), d.mass, p));
        for (const double x : noisy.phi.values) CHECK(std::abs(x - v) <= 1e-10);
      }
    }
  }

  TEST_CASE("zero noise constant start stays constant") {
    const PotentialParams p{};
    const auto d = discretize(2, 3);
    auto s = initial_state(d.mesh.make_field(0.3), d.mass, p);
    SavScheme scheme(d, 1e-3, p);
    for (int n = 0; n < 20; ++n) {
      s = scheme.step(s, compute_coefficients(s.phi, d.mesh.make_field(), d.mass, p));
      const double v0 = s.phi[0];
      for (const double x : s.phi.values) CHECK(x == doctest::Approx(v0).epsilon(1e-10));
    }
    CHECK(std::abs(s.phi[0]) > 0.3);
  }

  TEST_CASE("zero noise energy is non-increasing") {
    const PotentialParams p{};
    const auto d = discretize(2, 4);
    auto s = initial_state(initial_field(InitialCondition{}, d.mesh, p.epsilon), d.mass, p);
    SavScheme scheme(d, 1e-3, p);
    double prev = energy_total(s.phi, s.r, d.stiffness, p);
    for (int n = 0; n < 50; ++n) {
      s = scheme.step(s, compute_coefficients(s.phi, d.mesh.make_field(), d.mass, p));
      const double e = energy_total(s.phi, s.r, d.stiffness, p);
      CHECK(e <= prev + 1e-12);
      prev = e;
    }
  }

  TEST_CASE("one step tracking error equals the Taylor remainder") {
    // With s(t) = sqrt(E_h(phi^0 + t dphi)) and the noise part m = n - dphi,
    // r^1 - s(0) collects the first and second order terms of s plus the
    // noise-correction terms, so
    //   s(1) - r^1 - R_noise = s(1) - s(0) - s'(0) - s''(0)/2.
    std::mt19937_64 rng(25);
    for (const int dim : {1, 2}) {
      const auto d = discretize(dim, 3);
      const PotentialParams p{1e-5, 0.1};
      for (int t = 0; t < 5; ++t) {
        auto in = random_step(d, p, rng);
        in.state.r = std::sqrt(in.coeffs.E);
        const auto next = dense_oracle_step(in.state, in.coeffs, d.mass, d.stiffness, in.tau, p);
        const auto& phi0 = in.state.phi;
        const double e0 = in.coeffs.E;
        const double se = std::sqrt(e0);
        const std::size_t n = phi0.size();
        std::vector<double> dphi(n), g1(n), g2(n);
        for (std::size_t j = 0; j < n; ++j) {
          dphi[j] = next.phi[j] - phi0[j];
          g1[j] = d.mass.diag[j] * F1(phi0[j]) / p.epsilon;
          g2[j] = d.mass.diag[j] * F2(phi0[j]) / p.epsilon;
        }
        double s1 = 0.0, s2 = 0.0, g1n = 0.0, cross = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          const double tm = in.coeffs.n_vec[j] - dphi[j];
          s1 += g1[j] * dphi[j];
          s2 += g2[j] * dphi[j] * dphi[j];
          g1n += g1[j] * tm;
          cross += g2[j] * dphi[j] * tm;
        }
        const double ds = s1 / (2 * se);
        const double dds = -s1 * s1 / (4 * e0 * se) + s2 / (2 * se);
        const double r_noise = -cross / (4 * se) + s1 * g1n / (8 * e0 * se);
        auto shifted = phi0;
        for (std::size_t j = 0; j < n; ++j) shifted[j] += dphi[j];
        const double s_end = std::sqrt(energy_Eh(shifted, d.mass, p));
        const double taylor = s_end - se - ds - 0.5 * dds;
        const double lhs = (s_end - next.r) - r_noise;
        CHECK(std::abs(taylor) > 1e-12);
        CHECK(std::abs(lhs - taylor) <= 1e-6 * std::abs(taylor) + 1e-13);
      }
    }
  }

  TEST_CASE("signed distance to the ellipse") {
    const Point c{0.5, 0.5}, ax{0.3, 0.18};
    CHECK(signed_distance_ellipse(c, c, ax, 2) == doctest::Approx(0.18));
    CHECK(signed_distance_ellipse(Point{0.9, 0.5}, c, ax, 2) == doctest::Approx(-0.1));
    CHECK(std::abs(signed_distance_ellipse(Point{0.5, 0.5 + 0.18}, c, ax, 2)) < 1e-14);
    CHECK(signed_distance_ellipse(Point{0.5, 0.0}, c, ax, 1) == doctest::Approx(0.3));
    CHECK(signed_distance_ellipse(Point{0.95, 0.0}, c, ax, 1) == doctest::Approx(-0.15));
    // Periodic image: x = 0.05 is 0.45 from the centre either way.
    CHECK(signed_distance_ellipse(Point{0.05, 0.5}, c, ax, 2) == doctest::Approx(signed_distance_ellipse(Point{0.95, 0.5}, c, ax, 2)));

    // Dense boundary sampling oracle.
    std::mt19937_64 rng(26);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int samples = 200000;
    for (int t = 0; t < 30; ++t) {
      const Point q{u(rng), u(rng)};
      double dx = q[0] - c[0], dy = q[1] - c[1];
      dx -= std::round(dx);
      dy -= std::round(dy);
      auto dist = [&](double th) { return std::hypot(dx - ax[0] * std::cos(th), dy - ax[1] * std::sin(th)); };
      double best = 1e9, best_th = 0.0;
      for (int k = 0; k < samples; ++k) {
        const double th = 2.0 * std::numbers::pi * k / samples;
        if (dist(th) < best) {
          best = dist(th);
          best_th = th;
        }
      }
      // Resample densely around the best coarse sample.
      const double width = 2.0 * std::numbers::pi / samples;
      for (int k = -samples / 100; k <= samples / 100; ++k) best = std::min(best, dist(best_th + width * k / (samples / 100)));
      const bool inside = (dx / ax[0]) * (dx / ax[0]) + (dy / ax[1]) * (dy / ax[1]) < 1.0;
      CHECK(std::abs(signed_distance_ellipse(q, c, ax, 2) - (inside ? best : -best)) < 1e-8);
    }
  }

  TEST_CASE("initial profiles") {
    const auto mesh = build_torus_mesh(2, 5);
    const double eps = 0.02;
    const auto f = initial_field(InitialCondition{}, mesh, eps);
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
      const auto p = mesh.coordinates(i);
      CHECK(f[i] == doctest::Approx(std::tanh(signed_distance_ellipse(p, {0.5, 0.5}, {0.3, 0.18}, 2) / (std::sqrt(2.0) * eps))));
    }
    InitialCondition cos_ic{InitialKind::cosine, 0.5, 2};
    CHECK(std::abs(initial_value(cos_ic, Point{0.125, 0.0}, 2, eps)) < 1e-15);
    CHECK(initial_value(cos_ic, Point{0.5, 0.5}, 2, eps) == doctest::Approx(0.5));
    CHECK(initial_value(InitialCondition{InitialKind::constant, -0.4}, Point{0.3, 0.2}, 1, eps) == -0.4);
  }

  TEST_CASE("a step reads only the increment it is entitled to") {
    const PotentialParams p{};
    const auto d = discretize(1, 5);
    const NoiseModel model{1, NoiseModel::default_modes(1), 3};
    const double tau = 1.0 / 256;
    auto path = generate_increments(model, 0, 8, tau);
    auto poisoned = path;
    for (std::size_t s = 4; s < 8; ++s) {
      for (std::size_t m = 0; m < path.modes; ++m) poisoned.increments[s * path.modes + m] = std::numeric_limits<double>::quiet_NaN();
    }
    const ModeBasis basis(model, d.mesh);
    const auto phi0 = initial_field(InitialCondition{}, d.mesh, p.epsilon);
    SavScheme s1(d, tau, p), s2(d, tau, p);
    PathRunner clean(s1, basis, path, phi0), dirty(s2, basis, poisoned, phi0);
    for (int n = 0; n < 4; ++n) {
      clean.advance();
      dirty.advance();
      CHECK(clean.state().phi.values == dirty.state().phi.values);
      CHECK(clean.state().r == dirty.state().r);
    }
    CHECK_THROWS_AS(dirty.advance(), PathError);
  }

  TEST_CASE("path runner reports failures with the step") {
    const PotentialParams p{};
    const auto d = discretize(1, 4);
    const NoiseModel model{1, NoiseModel::default_modes(1), 3};
    auto path = generate_increments(model, 0, 6, 0.01);
    path.increments[3 * path.modes] = std::numeric_limits<double>::infinity();
    const ModeBasis basis(model, d.mesh);
    SavScheme scheme(d, 0.01, p);
    try {
      (void)run_path(scheme, basis, path, d.mesh.make_field(0.2));
      FAIL("expected PathError");
    } catch (const PathError& e) {
      CHECK(e.step() == 4);
    }
    SavScheme other(d, 0.02, p);
    CHECK_THROWS_AS(PathRunner(other, basis, path, d.mesh.make_field()), std::invalid_argument);
  }

  TEST_CASE("run_path bookkeeping and tracking with zero noise") {
    const PotentialParams p{};
    // Level 9 resolves the interfaces, so the profile is close to stationary.
    const auto d = discretize(1, 9);
    const NoiseModel model{1, NoiseModel::default_modes(1), 3};
    NoisePath path{0, 1e-3, 40, model.modes.size(), std::vector<double>(40 * model.modes.size(), 0.0)};
    const ModeBasis basis(model, d.mesh);
    SavScheme scheme(d, 1e-3, p);
    std::size_t seen = 0;
    const auto res = run_path(scheme, basis, path, initial_field(InitialCondition{}, d.mesh, p.epsilon), PathOptions{10},
                              [&](const SavState&, const StepDiagnostics&) { ++seen; });
    CHECK(seen == 41);
    CHECK(res.states.size() == 5);
    CHECK(res.diagnostics.size() == 41);
    CHECK(res.states.back().step == 40);
    CHECK(res.consumed_increment_sum == 0.0);
    CHECK(res.max_tracking_error <= 1e-6);
    for (std::size_t n = 1; n < res.diagnostics.size(); ++n) CHECK(res.diagnostics[n].e_sav <= res.diagnostics[n - 1].e_sav + 1e-12);
  }
}
