#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "savac/field.hpp"

namespace savac {

using NodeIndex = std::uint32_t;
using Point = std::array<double, 2>;

/// Structured periodic simplicial mesh of the unit torus (0,1)^dim.
///
/// Nodes are numbered row-major by integer grid coordinates, node = iy * n + ix
/// with n = 2^level nodes per axis; indices wrap modulo n. In 2-D every grid
/// square is split along its lower-left to upper-right diagonal. The first
/// vertex of every cell is the lower-left corner of its square, and the other
/// vertices lie at offsets {0, h} per axis from it.
class TorusMesh {
 public:
  int dim() const { return dim_; }
  int level() const { return level_; }
  double spacing() const { return spacing_; }
  std::size_t nodes_per_axis() const { return per_axis_; }
  std::size_t node_count() const { return node_count_; }
  std::size_t cell_count() const { return cells_.size() / vertices_per_cell(); }
  std::size_t vertices_per_cell() const { return static_cast<std::size_t>(dim_) + 1; }

  std::span<const NodeIndex> cell(std::size_t c) const {
    return {cells_.data() + c * vertices_per_cell(), vertices_per_cell()};
  }

  /// Cell volume (length in 1-D, area in 2-D); all cells are congruent.
  double cell_volume() const;

  Point coordinates(std::size_t node) const;
  std::array<std::size_t, 2> grid_index(std::size_t node) const;
  std::size_t node_at(std::int64_t ix, std::int64_t iy = 0) const;

  /// Vertex coordinates of cell c, unwrapped so that the cell is a genuine
  /// simplex in R^dim (vertices of cells touching x = 1 may exceed 1).
  std::array<Point, 3> cell_vertices(std::size_t c) const;

  FieldVector make_field(double fill = 0.0) const {
    return FieldVector(dim_, level_, node_count_, fill);
  }

 private:
  friend TorusMesh build_torus_mesh(int dim, int level);

  int dim_ = 1;
  int level_ = 1;
  double spacing_ = 0.5;
  std::size_t per_axis_ = 0;
  std::size_t node_count_ = 0;
  std::vector<NodeIndex> cells_;
};

/// Throws std::invalid_argument for dim outside {1, 2}, level < 1, or a level
/// whose node count would not fit in NodeIndex.
TorusMesh build_torus_mesh(int dim, int level);

/// Evaluates the P1 function given by `coarse_field` on `coarse` at the nodes
/// of the nested mesh `fine`.
FieldVector prolong(const FieldVector& coarse_field, const TorusMesh& coarse, const TorusMesh& fine);

}  // namespace savac
