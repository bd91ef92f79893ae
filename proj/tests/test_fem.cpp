#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "savac/fem.hpp"
#include "test_support.hpp"

using namespace savac;

namespace {

// Element stiffness from gradients obtained by solving the 2x2 (or 1x1)
// system for the affine map of each cell, summed densely.
Eigen::MatrixXd dense_stiffness_oracle(const TorusMesh& mesh) {
  const std::size_t n = mesh.node_count();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto v = mesh.cell_vertices(c);
    const auto nodes = mesh.cell(c);
    if (mesh.dim() == 1) {
      const double len = v[1][0] - v[0][0];
      const double g[2] = {-1.0 / len, 1.0 / len};
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) k(nodes[a], nodes[b]) += g[a] * g[b] * len;
      }
      continue;
    }
    Eigen::Matrix3d vand;
    for (int a = 0; a < 3; ++a) vand.row(a) << 1.0, v[a][0], v[a][1];
    // Columns of inv(vand) hold the coefficients (c0, cx, cy) of each hat.
    const Eigen::Matrix3d coef = vand.inverse();
    const double area = 0.5 * std::abs(vand.determinant());
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        k(nodes[a], nodes[b]) += area * (coef(1, a) * coef(1, b) + coef(2, a) * coef(2, b));
      }
    }
  }
  return k;
}

Eigen::MatrixXd consistent_mass(const TorusMesh& mesh) {
  const std::size_t n = mesh.node_count();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const double vol = mesh.cell_volume();
  const int d = mesh.dim();
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto nodes = mesh.cell(c);
    for (int a = 0; a <= d; ++a) {
      for (int b = 0; b <= d; ++b) m(nodes[a], nodes[b]) += vol * (a == b ? 2.0 : 1.0) / ((d + 1) * (d + 2));
    }
  }
  return m;
}

Eigen::VectorXd to_eigen(const FieldVector& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.values.data(), static_cast<Eigen::Index>(f.size()));
}

}  // namespace

TEST_SUITE("fem") {
  TEST_CASE("lumped mass is positive, uniform and sums to one") {
    for (const int dim : {1, 2}) {
      for (int level = 1; level <= 6; ++level) {
        const auto mesh = build_torus_mesh(dim, level);
        const auto m = assemble_lumped_mass(mesh);
        const double h = mesh.spacing();
        double sum = 0.0;
        for (const double mi : m.diag) {
          CHECK(mi == doctest::Approx(dim == 1 ? h : h * h).epsilon(1e-14));
          sum += mi;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("1-D level 2 stiffness has the periodic tridiagonal stencil") {
    const auto k = assemble_stiffness(build_torus_mesh(1, 2));
    CHECK(k.entry(0, 0) == doctest::Approx(8.0));
    CHECK(k.entry(0, 1) == doctest::Approx(-4.0));
    CHECK(k.entry(0, 3) == doctest::Approx(-4.0));
    CHECK(k.entry(0, 2) == 0.0);
  }

  TEST_CASE("2-D stiffness row is the five-point stencil") {
    const auto mesh = build_torus_mesh(2, 3);
    const auto k = assemble_stiffness(mesh);
    const std::size_t i = mesh.node_at(3, 4);
    CHECK(k.entry(i, i) == doctest::Approx(4.0));
    CHECK(k.entry(i, mesh.node_at(4, 4)) == doctest::Approx(-1.0));
    CHECK(k.entry(i, mesh.node_at(2, 4)) == doctest::Approx(-1.0));
    CHECK(k.entry(i, mesh.node_at(3, 5)) == doctest::Approx(-1.0));
    CHECK(k.entry(i, mesh.node_at(3, 3)) == doctest::Approx(-1.0));
    CHECK(std::abs(k.entry(i, mesh.node_at(4, 5))) < 1e-15);
  }

  TEST_CASE("stiffness matches the element-gradient oracle") {
    for (const int dim : {1, 2}) {
      const auto mesh = build_torus_mesh(dim, dim == 1 ? 5 : 3);
      const auto k = assemble_stiffness(mesh);
      const auto oracle = dense_stiffness_oracle(mesh);
      double worst = 0.0;
      for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        for (std::size_t j = 0; j < mesh.node_count(); ++j) {
          worst = std::max(worst, std::abs(k.entry(i, j) - oracle(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
        }
      }
      CHECK(worst < 1e-12 * oracle.cwiseAbs().maxCoeff());
    }
  }

  TEST_CASE("stiffness is symmetric, positive semidefinite, with zero row sums") {
    std::mt19937_64 rng(3);
    for (const int dim : {1, 2}) {
      const auto mesh = build_torus_mesh(dim, 4);
      const auto k = assemble_stiffness(mesh);
      for (const double s : k.row_sums()) CHECK(std::abs(s) < 1e-12 * k.norm_inf());
      for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        const auto cols = k.column_indices().subspan(k.row_offsets()[i], k.row_offsets()[i + 1] - k.row_offsets()[i]);
        CHECK(cols.size() <= (dim == 1 ? 3u : 7u));
        for (const auto j : cols) CHECK(k.entry(i, j) == k.entry(j, i));
      }
      for (int t = 0; t < 10; ++t) {
        const auto f = testing::random_field(mesh, rng);
        CHECK(dot(f.values, k.apply(f.values)) >= -1e-12);
      }
    }
  }

  TEST_CASE("cosine is an eigenvector of the discrete Laplacian") {
    for (const int dim : {1, 2}) {
      const auto mesh = build_torus_mesh(dim, 5);
      const double h = mesh.spacing();
      const auto f = nodal_interpolate([](const Point& p) { return std::cos(2.0 * std::numbers::pi * p[0]); }, mesh);
      const auto lap = discrete_laplacian(f, assemble_lumped_mass(mesh), assemble_stiffness(mesh));
      const double lambda = -(2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * h)) / (h * h);
      double worst = 0.0;
      for (std::size_t i = 0; i < f.size(); ++i) worst = std::max(worst, std::abs(lap[i] - lambda * f[i]));
      CHECK(worst < 1e-9 * std::abs(lambda));
    }
  }

  TEST_CASE("discrete integration by parts") {
    std::mt19937_64 rng(4);
    for (const int dim : {1, 2}) {
      const auto d = discretize(dim, 4);
      for (int t = 0; t < 5; ++t) {
        const auto u = testing::random_field(d.mesh, rng);
        const auto v = testing::random_field(d.mesh, rng);
        const double lhs = lumped_inner(discrete_laplacian(u, d.mass, d.stiffness), v, d.mass);
        const double rhs = -dot(u.values, d.stiffness.apply(v.values));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
      }
    }
  }

  TEST_CASE("lumped inner product") {
    const auto mesh = build_torus_mesh(1, 2);
    const auto m = assemble_lumped_mass(mesh);
    CHECK(lumped_inner(mesh.make_field(1.0), mesh.make_field(1.0), m) == doctest::Approx(1.0));
    FieldVector hat = mesh.make_field();
    hat[1] = 1.0;
    CHECK(lumped_inner(hat, hat, m) == doctest::Approx(0.25));

    std::mt19937_64 rng(5);
    const auto m2 = build_torus_mesh(2, 3);
    const auto mm = assemble_lumped_mass(m2);
    const auto f = testing::random_field(m2, rng);
    const auto g = testing::random_field(m2, rng);
    long double direct = 0.0L;
    for (std::size_t i = 0; i < f.size(); ++i) direct += static_cast<long double>(f[i]) * g[i] / 64.0L;
    CHECK(lumped_inner(f, g, mm) == doctest::Approx(static_cast<double>(direct)).epsilon(1e-13));
  }

  TEST_CASE("H1 seminorm") {
    const auto mesh = build_torus_mesh(1, 4);
    const auto k = assemble_stiffness(mesh);
    CHECK(h1_seminorm_sq(mesh.make_field(3.0), k) == doctest::Approx(0.0).scale(1e-12));
    FieldVector hat = mesh.make_field();
    hat[5] = 1.0;
    // Two slopes +-1/h, each over an interval of length h.
    CHECK(h1_seminorm_sq(hat, k) == doctest::Approx(2.0 / mesh.spacing()));

    std::mt19937_64 rng(6);
    const auto m2 = build_torus_mesh(2, 3);
    const auto k2 = assemble_stiffness(m2);
    const auto f = testing::random_field(m2, rng);
    double direct = 0.0;
    for (std::size_t c = 0; c < m2.cell_count(); ++c) {
      const auto v = m2.cell_vertices(c);
      const auto n = m2.cell(c);
      const double fx0 = f[n[0]], fx1 = f[n[1]], fx2 = f[n[2]];
      // Gradient of the affine interpolant by a direct 2x2 solve.
      const double a11 = v[1][0] - v[0][0], a12 = v[1][1] - v[0][1];
      const double a21 = v[2][0] - v[0][0], a22 = v[2][1] - v[0][1];
      const double det = a11 * a22 - a12 * a21;
      const double gx = ((fx1 - fx0) * a22 - a12 * (fx2 - fx0)) / det;
      const double gy = (a11 * (fx2 - fx0) - a21 * (fx1 - fx0)) / det;
      direct += 0.5 * std::abs(det) * (gx * gx + gy * gy);
    }
    CHECK(h1_seminorm_sq(f, k2) == doctest::Approx(direct).epsilon(1e-12));
  }

  TEST_CASE("lumped and consistent L2 norms are equivalent") {
    std::mt19937_64 rng(7);
    for (const int dim : {1, 2}) {
      for (int level = 2; level <= (dim == 1 ? 6 : 5); ++level) {
        const auto mesh = build_torus_mesh(dim, level);
        const auto lumped = assemble_lumped_mass(mesh);
        const auto mc = consistent_mass(mesh);
        for (int t = 0; t < 10; ++t) {
          const auto f = testing::random_field(mesh, rng);
          const auto v = to_eigen(f);
          const double ratio = lumped_inner(f, f, lumped) / v.dot(mc * v);
          CHECK(ratio >= 0.25);
          CHECK(ratio <= 4.0);
        }
      }
    }
  }

  TEST_CASE("nodal interpolation") {
    const auto one = nodal_interpolate([](const Point&) { return 1.0; }, build_torus_mesh(2, 3));
    for (const double v : one.values) CHECK(v == 1.0);
    const auto x = nodal_interpolate([](const Point& p) { return p[0]; }, build_torus_mesh(1, 1));
    CHECK(x.values == std::vector<double>{0.0, 0.5});
  }
}
