#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace savac {

/// Nodal coefficients of a P1 finite element function on a TorusMesh.
struct FieldVector {
  int dim = 0;
  int level = 0;
  std::vector<double> values;

  FieldVector() = default;
  FieldVector(int dim_, int level_, std::size_t n, double fill = 0.0)
      : dim(dim_), level(level_), values(n, fill) {}
  FieldVector(int dim_, int level_, std::vector<double> v)
      : dim(dim_), level(level_), values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  std::span<double> span() { return values; }
  std::span<const double> span() const { return values; }

  bool same_shape(const FieldVector& other) const {
    return dim == other.dim && level == other.level && size() == other.size();
  }
};

}  // namespace savac
