#include "savac/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace savac {

SparseSymOperator SparseSymOperator::from_triplets(std::size_t dimension, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= dimension || t.col >= dimension) {
      throw std::invalid_argument("sparse operator: triplet index out of range");
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseSymOperator op;
  op.dimension_ = dimension;
  op.row_offsets_.assign(dimension + 1, 0);
  for (std::size_t k = 0; k < triplets.size();) {
    const auto row = triplets[k].row;
    const auto col = triplets[k].col;
    double sum = 0.0;
    for (; k < triplets.size() && triplets[k].row == row && triplets[k].col == col; ++k) {
      sum += triplets[k].value;
    }
    op.columns_.push_back(col);
    op.values_.push_back(sum);
    ++op.row_offsets_[row + 1];
  }
  for (std::size_t r = 0; r < dimension; ++r) op.row_offsets_[r + 1] += op.row_offsets_[r];

  for (std::size_t r = 0; r < dimension; ++r) {
    for (std::size_t k = op.row_offsets_[r]; k < op.row_offsets_[r + 1]; ++k) {
      const double mirror = op.entry(op.columns_[k], r);
      const double scale = std::max({std::abs(op.values_[k]), std::abs(mirror), 1e-300});
      if (std::abs(op.values_[k] - mirror) > 1e-15 * scale) {
        throw std::invalid_argument("sparse operator: entries are not symmetric");
      }
    }
  }
  return op;
}

void SparseSymOperator::apply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t r = 0; r < dimension_; ++r) {
    double sum = 0.0;
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      sum += values_[k] * x[columns_[k]];
    }
    y[r] = sum;
  }
}

std::vector<double> SparseSymOperator::apply(std::span<const double> x) const {
  std::vector<double> y(dimension_);
  apply(x, y);
  return y;
}

double SparseSymOperator::entry(std::size_t row, std::size_t col) const {
  const auto first = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row]);
  const auto last = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row + 1]);
  const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(col));
  if (it == last || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - columns_.begin())];
}

std::vector<double> SparseSymOperator::diagonal() const {
  std::vector<double> d(dimension_);
  for (std::size_t r = 0; r < dimension_; ++r) d[r] = entry(r, r);
  return d;
}

std::vector<double> SparseSymOperator::row_sums() const {
  std::vector<double> s(dimension_, 0.0);
  for (std::size_t r = 0; r < dimension_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) s[r] += values_[k];
  }
  return s;
}

double SparseSymOperator::norm_inf() const {
  double best = 0.0;
  for (std::size_t r = 0; r < dimension_; ++r) {
    double sum = 0.0;
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) sum += std::abs(values_[k]);
    best = std::max(best, sum);
  }
  return best;
}

SparseSymOperator SparseSymOperator::shifted(std::span<const double> shift, double scale) const {
  if (shift.size() != dimension_) {
    throw std::invalid_argument("sparse operator: shift has wrong length");
  }
  std::vector<Triplet> triplets;
  triplets.reserve(values_.size() + dimension_);
  for (std::size_t r = 0; r < dimension_; ++r) {
    triplets.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r), shift[r]});
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      triplets.push_back({static_cast<std::uint32_t>(r), columns_[k], scale * values_[k]});
    }
  }
  return from_triplets(dimension_, std::move(triplets));
}

std::size_t SolverOptions::iteration_cap(std::size_t dimension) const {
  if (max_iterations > 0) return max_iterations;
  const auto cap = static_cast<std::size_t>(std::ceil(10.0 * std::sqrt(static_cast<double>(dimension))));
  return std::max<std::size_t>(cap, 10);
}

void SolverOptions::validate() const {
  if (!(rel_tolerance > 0.0 && rel_tolerance < 1.0)) {
    throw std::invalid_argument("solver: rel_tolerance must lie in (0, 1)");
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += x[i] * y[i];
  return sum;
}

double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

CgResult cg_solve(const SparseSymOperator& a, std::span<const double> b, std::span<const double> x0,
                  const SolverOptions& opts) {
  opts.validate();
  const std::size_t n = a.dimension();
  if (b.size() != n || (!x0.empty() && x0.size() != n)) {
    throw std::invalid_argument("cg: right-hand side or initial guess has wrong length");
  }

  CgResult result;
  const double b_norm = norm2(b);
  if (b_norm == 0.0) {
    result.x.assign(n, 0.0);
    return result;
  }

  std::vector<double> inv_diag(n, 1.0);
  if (opts.preconditioner == Preconditioner::diagonal) {
    const auto d = a.diagonal();
    for (std::size_t i = 0; i < n; ++i) {
      if (!(d[i] > 0.0)) throw std::invalid_argument("cg: Jacobi preconditioner needs a positive diagonal");
      inv_diag[i] = 1.0 / d[i];
    }
  }

  std::vector<double> x = x0.empty() ? std::vector<double>(n, 0.0) : std::vector<double>(x0.begin(), x0.end());
  std::vector<double> r(n), z(n), p(n), q(n);
  const std::size_t cap = opts.iteration_cap(n);
  const double target = opts.rel_tolerance * b_norm;

  auto true_residual = [&] {
    a.apply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    return norm2(r);
  };

  double res = true_residual();
  std::size_t it = 0;
  while (res > target) {
    // (Re)start from the true residual; restarts only happen if the recursive
    // residual drifted below the target while the true one did not.
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    while (res > target) {
      if (it == cap) {
        std::ostringstream msg;
        msg << "cg: no convergence after " << it << " iterations (relative residual " << res / b_norm
            << ", tolerance " << opts.rel_tolerance << ")";
        throw SolverError(msg.str(), res / b_norm, it);
      }
      a.apply(p, q);
      const double alpha = rz / dot(p, q);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      ++it;
      res = norm2(r);
      if (res <= target) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_next = dot(r, z);
      const double beta = rz_next / rz;
      rz = rz_next;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    res = true_residual();
  }

  result.x = std::move(x);
  result.iterations = it;
  result.relative_residual = res / b_norm;
  return result;
}

}  // namespace savac
