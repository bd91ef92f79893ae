#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace savac {

/// Symmetric sparse matrix in compressed sparse row form. Both triangles are
/// stored so a row-wise product needs no transposition.
class SparseSymOperator {
 public:
  struct Triplet {
    std::uint32_t row;
    std::uint32_t col;
    double value;
  };

  SparseSymOperator() = default;

  /// Sums duplicate entries. Throws std::invalid_argument if the resulting
  /// pattern or values are not symmetric.
  static SparseSymOperator from_triplets(std::size_t dimension, std::vector<Triplet> triplets);

  std::size_t dimension() const { return dimension_; }
  std::size_t nonzeros() const { return values_.size(); }
  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const std::uint32_t> column_indices() const { return columns_; }
  std::span<const double> values() const { return values_; }

  /// y = A x
  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;

  double entry(std::size_t row, std::size_t col) const;
  std::vector<double> diagonal() const;
  std::vector<double> row_sums() const;
  double norm_inf() const;

  /// diag(shift) + scale * A, on the same sparsity pattern (diagonal entries
  /// are added when missing).
  SparseSymOperator shifted(std::span<const double> shift, double scale) const;

 private:
  std::size_t dimension_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::uint32_t> columns_;
  std::vector<double> values_;
};

enum class Preconditioner { none, diagonal };

struct SolverOptions {
  double rel_tolerance = 1e-10;
  /// 0 selects the default cap of 10 * sqrt(dimension) (at least 10).
  std::size_t max_iterations = 0;
  Preconditioner preconditioner = Preconditioner::diagonal;

  std::size_t iteration_cap(std::size_t dimension) const;
  void validate() const;

  friend bool operator==(const SolverOptions&, const SolverOptions&) = default;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  std::size_t iterations() const { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

struct CgResult {
  std::vector<double> x;
  std::size_t iterations = 0;
  /// ||b - A x||_2 / ||b||_2 of the returned iterate (0 when b = 0).
  double relative_residual = 0.0;
};

/// Preconditioned conjugate gradients for SPD `a`, starting from x0 (zero if empty).
/// Throws SolverError when the iteration cap is reached first.
CgResult cg_solve(const SparseSymOperator& a, std::span<const double> b, std::span<const double> x0,
                  const SolverOptions& opts);

/// Left-to-right summation; results are reproducible run to run.
double dot(std::span<const double> x, std::span<const double> y);
double norm2(std::span<const double> x);

}  // namespace savac
