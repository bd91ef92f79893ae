#include "savac/fem.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace savac {

namespace {

void require_same(const FieldVector& f, std::size_t n, const char* what) {
  if (f.size() != n) throw std::invalid_argument(std::string(what) + ": size mismatch");
}

// Gradients of the barycentric coordinates of a simplex, as rows.
std::array<Point, 3> barycentric_gradients(const std::array<Point, 3>& v, int dim) {
  if (dim == 1) {
    const double len = v[1][0] - v[0][0];
    return {Point{-1.0 / len, 0.0}, Point{1.0 / len, 0.0}, Point{}};
  }
  const double det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
  std::array<Point, 3> g{};
  for (int k = 0; k < 3; ++k) {
    const auto& a = v[(k + 1) % 3];
    const auto& b = v[(k + 2) % 3];
    g[k] = {(a[1] - b[1]) / det, (b[0] - a[0]) / det};
  }
  return g;
}

}  // namespace

LumpedMass assemble_lumped_mass(const TorusMesh& mesh) {
  LumpedMass mass;
  mass.diag.assign(mesh.node_count(), 0.0);
  const double share = mesh.cell_volume() / static_cast<double>(mesh.vertices_per_cell());
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    for (const auto node : mesh.cell(c)) mass.diag[node] += share;
  }
  return mass;
}

StiffnessMatrix assemble_stiffness(const TorusMesh& mesh) {
  const std::size_t nv = mesh.vertices_per_cell();
  const double volume = mesh.cell_volume();
  std::vector<SparseSymOperator::Triplet> triplets;
  triplets.reserve(mesh.cell_count() * nv * nv);
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    const auto nodes = mesh.cell(c);
    const auto grads = barycentric_gradients(mesh.cell_vertices(c), mesh.dim());
    for (std::size_t a = 0; a < nv; ++a) {
      for (std::size_t b = 0; b < nv; ++b) {
        const double value = volume * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
        // Hypotenuse couplings of right triangles vanish exactly.
        if (value == 0.0 && a != b) continue;
        triplets.push_back({nodes[a], nodes[b], value});
      }
    }
  }
  return SparseSymOperator::from_triplets(mesh.node_count(), std::move(triplets));
}

Discretization discretize(int dim, int level) {
  Discretization d{build_torus_mesh(dim, level), {}, {}};
  d.mass = assemble_lumped_mass(d.mesh);
  d.stiffness = assemble_stiffness(d.mesh);
  return d;
}

FieldVector discrete_laplacian(const FieldVector& field, const LumpedMass& mass, const StiffnessMatrix& stiff) {
  require_same(field, mass.diag.size(), "discrete_laplacian");
  FieldVector out = field;
  stiff.apply(field.span(), out.span());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -out[i] / mass.diag[i];
  return out;
}

double lumped_inner(const FieldVector& f, const FieldVector& g, const LumpedMass& mass) {
  require_same(f, mass.diag.size(), "lumped_inner");
  require_same(g, mass.diag.size(), "lumped_inner");
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += mass.diag[i] * f[i] * g[i];
  return sum;
}

double h1_seminorm_sq(const FieldVector& f, const StiffnessMatrix& stiff) {
  require_same(f, stiff.dimension(), "h1_seminorm_sq");
  const auto kf = stiff.apply(f.span());
  return std::max(0.0, dot(f.span(), kf));
}

FieldVector nodal_interpolate(const std::function<double(const Point&)>& fn, const TorusMesh& mesh) {
  FieldVector out = mesh.make_field();
  for (std::size_t i = 0; i < mesh.node_count(); ++i) out[i] = fn(mesh.coordinates(i));
  return out;
}

}  // namespace savac
