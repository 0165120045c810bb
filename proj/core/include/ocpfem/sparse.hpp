#pragma once

#include "ocpfem/vector_ops.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace ocpfem::la {

struct Triplet {
  int row;
  int col;
  double value;
};

/// Square CSR matrix with sorted, duplicate-free column indices per row.
class SparseMatrix {
public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t n, std::vector<std::size_t> row_offsets, std::vector<int> col_indices,
               std::vector<double> values);

  static SparseMatrix identity(std::size_t n);
  static SparseMatrix diagonal(std::span<const double> d);
  /// Duplicates are summed in input order.
  static SparseMatrix from_triplets(std::size_t n, std::vector<Triplet> triplets);
  /// Row-major dense input; exact zeros are dropped.
  static SparseMatrix from_dense(std::size_t n, std::span<const double> dense);

  std::size_t size() const { return n_; }
  std::size_t nnz() const { return values_.size(); }
  std::span<const std::size_t> row_offsets() const { return row_offsets_; }
  std::span<const int> col_indices() const { return col_indices_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// y = A x. Each row accumulates in column order, so the output does not
  /// depend on the thread count.
  void apply(std::span<const double> x, std::span<double> y) const;
  Vector apply(std::span<const double> x) const;

  double at(std::size_t i, std::size_t j) const;
  Vector diagonal_entries() const;
  Vector row_sums() const;
  double max_abs() const;
  double max_asymmetry() const;
  SparseMatrix scaled(double alpha) const;
  std::vector<double> to_dense() const;

private:
  std::size_t n_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<int> col_indices_;
  std::vector<double> values_;
};

/// alpha * A + beta * B on the union pattern.
SparseMatrix add(const SparseMatrix& a, double alpha, const SparseMatrix& b, double beta);

/// Free-function form of SparseMatrix::apply.
Vector spmv(const SparseMatrix& a, std::span<const double> x);

/// Positive diagonal operator.
class DiagonalMatrix {
public:
  DiagonalMatrix() = default;
  explicit DiagonalMatrix(Vector entries);

  std::size_t size() const { return entries_.size(); }
  std::span<const double> entries() const { return entries_; }
  double operator[](std::size_t i) const { return entries_[i]; }

  void apply(std::span<const double> x, std::span<double> y) const;
  void apply_inverse(std::span<const double> x, std::span<double> y) const;

private:
  Vector entries_;
};

/// Matrix-free symmetric operator x -> y.
struct LinearOperator {
  std::size_t size = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;

  Vector operator()(std::span<const double> x) const {
    Vector y(size);
    apply(x, y);
    return y;
  }
};

/// The operator keeps the matrix alive.
LinearOperator make_operator(std::shared_ptr<const SparseMatrix> a);
LinearOperator make_operator(const DiagonalMatrix& d);

} // namespace ocpfem::la
