#include "savac/mesh.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace savac {

namespace {

// Largest dim * level such that node_count = 2^(dim*level) fits in NodeIndex
// with room to spare for cell counts.
constexpr int kMaxTotalBits = std::numeric_limits<NodeIndex>::digits - 2;

}  // namespace

TorusMesh build_torus_mesh(int dim, int level) {
  if (dim != 1 && dim != 2) {
    throw std::invalid_argument("torus mesh: dim must be 1 or 2, got " + std::to_string(dim));
  }
  if (level < 1) {
    throw std::invalid_argument("torus mesh: level must be >= 1, got " + std::to_string(level));
  }
  if (dim * level > kMaxTotalBits) {
    throw std::invalid_argument("torus mesh: level " + std::to_string(level) +
                                " overflows the node index type in dim " + std::to_string(dim));
  }

  TorusMesh mesh;
  mesh.dim_ = dim;
  mesh.level_ = level;
  mesh.per_axis_ = std::size_t{1} << level;
  mesh.spacing_ = 1.0 / static_cast<double>(mesh.per_axis_);
  mesh.node_count_ = dim == 1 ? mesh.per_axis_ : mesh.per_axis_ * mesh.per_axis_;

  const auto n = static_cast<std::int64_t>(mesh.per_axis_);
  if (dim == 1) {
    mesh.cells_.reserve(2 * mesh.node_count_);
    for (std::int64_t i = 0; i < n; ++i) {
      mesh.cells_.push_back(static_cast<NodeIndex>(mesh.node_at(i)));
      mesh.cells_.push_back(static_cast<NodeIndex>(mesh.node_at(i + 1)));
    }
  } else {
    mesh.cells_.reserve(6 * mesh.node_count_);
    for (std::int64_t j = 0; j < n; ++j) {
      for (std::int64_t i = 0; i < n; ++i) {
        const auto v00 = static_cast<NodeIndex>(mesh.node_at(i, j));
        const auto v10 = static_cast<NodeIndex>(mesh.node_at(i + 1, j));
        const auto v01 = static_cast<NodeIndex>(mesh.node_at(i, j + 1));
        const auto v11 = static_cast<NodeIndex>(mesh.node_at(i + 1, j + 1));
        mesh.cells_.insert(mesh.cells_.end(), {v00, v10, v11});
        mesh.cells_.insert(mesh.cells_.end(), {v00, v11, v01});
      }
    }
  }
  return mesh;
}

double TorusMesh::cell_volume() const {
  return dim_ == 1 ? spacing_ : 0.5 * spacing_ * spacing_;
}

std::array<std::size_t, 2> TorusMesh::grid_index(std::size_t node) const {
  if (dim_ == 1) return {node, 0};
  return {node % per_axis_, node / per_axis_};
}

Point TorusMesh::coordinates(std::size_t node) const {
  const auto [ix, iy] = grid_index(node);
  return {static_cast<double>(ix) * spacing_, static_cast<double>(iy) * spacing_};
}

std::size_t TorusMesh::node_at(std::int64_t ix, std::int64_t iy) const {
  const auto n = static_cast<std::int64_t>(per_axis_);
  const auto wx = static_cast<std::size_t>(((ix % n) + n) % n);
  if (dim_ == 1) return wx;
  const auto wy = static_cast<std::size_t>(((iy % n) + n) % n);
  return wy * per_axis_ + wx;
}

std::array<Point, 3> TorusMesh::cell_vertices(std::size_t c) const {
  const auto nodes = cell(c);
  std::array<Point, 3> out{};
  out[0] = coordinates(nodes[0]);
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    Point p = coordinates(nodes[k]);
    for (int d = 0; d < dim_; ++d) {
      if (p[d] < out[0][d]) p[d] += 1.0;
    }
    out[k] = p;
  }
  return out;
}

FieldVector prolong(const FieldVector& coarse_field, const TorusMesh& coarse, const TorusMesh& fine) {
  if (coarse.dim() != fine.dim()) {
    throw std::invalid_argument("prolong: meshes have different dimensions");
  }
  if (fine.level() < coarse.level()) {
    throw std::invalid_argument("prolong: fine level " + std::to_string(fine.level()) +
                                " is coarser than level " + std::to_string(coarse.level()));
  }
  if (coarse_field.size() != coarse.node_count()) {
    throw std::invalid_argument("prolong: field size does not match the coarse mesh");
  }

  const auto ratio = static_cast<std::int64_t>(std::size_t{1} << (fine.level() - coarse.level()));
  const double inv_ratio = 1.0 / static_cast<double>(ratio);
  const auto& v = coarse_field.values;
  FieldVector out = fine.make_field();

  for (std::size_t node = 0; node < fine.node_count(); ++node) {
    const auto [fx, fy] = fine.grid_index(node);
    const auto ix = static_cast<std::int64_t>(fx) / ratio;
    const double a = static_cast<double>(static_cast<std::int64_t>(fx) % ratio) * inv_ratio;
    if (fine.dim() == 1) {
      out[node] = (1.0 - a) * v[coarse.node_at(ix)] + a * v[coarse.node_at(ix + 1)];
      continue;
    }
    const auto iy = static_cast<std::int64_t>(fy) / ratio;
    const double b = static_cast<double>(static_cast<std::int64_t>(fy) % ratio) * inv_ratio;
    const double v00 = v[coarse.node_at(ix, iy)];
    const double v10 = v[coarse.node_at(ix + 1, iy)];
    const double v01 = v[coarse.node_at(ix, iy + 1)];
    const double v11 = v[coarse.node_at(ix + 1, iy + 1)];
    // Lower-right triangle {00, 10, 11} for a >= b, upper-left {00, 11, 01} otherwise.
    out[node] = a >= b ? v00 + a * (v10 - v00) + b * (v11 - v10)
                       : v00 + b * (v01 - v00) + a * (v11 - v01);
  }
  return out;
}

}  // namespace savac
