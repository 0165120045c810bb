#include "ocpfem/sparse.hpp"

#include "ocpfem/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ocpfem::la {

SparseMatrix::SparseMatrix(std::size_t n, std::vector<std::size_t> row_offsets,
                           std::vector<int> col_indices, std::vector<double> values)
    : n_(n), row_offsets_(std::move(row_offsets)), col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  if (row_offsets_.size() != n_ + 1 || row_offsets_.front() != 0 ||
      row_offsets_.back() != col_indices_.size() || col_indices_.size() != values_.size()) {
    throw ParameterError("inconsistent CSR arrays");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (row_offsets_[i] > row_offsets_[i + 1]) throw ParameterError("CSR offsets not monotone");
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const int c = col_indices_[k];
      if (c < 0 || static_cast<std::size_t>(c) >= n_) throw ParameterError("CSR column out of range");
      if (k > row_offsets_[i] && col_indices_[k - 1] >= c) {
        throw ParameterError("CSR columns not strictly increasing in row " + std::to_string(i));
      }
    }
  }
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  Vector ones(n, 1.0);
  return diagonal(ones);
}

SparseMatrix SparseMatrix::diagonal(std::span<const double> d) {
  const std::size_t n = d.size();
  std::vector<std::size_t> off(n + 1);
  std::vector<int> col(n);
  for (std::size_t i = 0; i < n; ++i) {
    off[i + 1] = i + 1;
    col[i] = static_cast<int>(i);
  }
  return SparseMatrix(n, std::move(off), std::move(col), Vector(d.begin(), d.end()));
}

SparseMatrix SparseMatrix::from_triplets(std::size_t n, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row < 0 || t.col < 0 || static_cast<std::size_t>(t.row) >= n ||
        static_cast<std::size_t>(t.col) >= n) {
      throw ParameterError("triplet index out of range");
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> off(n + 1, 0);
  std::vector<int> col;
  Vector val;
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (!col.empty() && k > 0 && triplets[k - 1].row == t.row && triplets[k - 1].col == t.col) {
      val.back() += t.value;
      continue;
    }
    col.push_back(t.col);
    val.push_back(t.value);
    ++off[static_cast<std::size_t>(t.row) + 1];
  }
  for (std::size_t i = 0; i < n; ++i) off[i + 1] += off[i];
  return SparseMatrix(n, std::move(off), std::move(col), std::move(val));
}

SparseMatrix SparseMatrix::from_dense(std::size_t n, std::span<const double> dense) {
  if (dense.size() != n * n) throw ParameterError("dense size mismatch");
  std::vector<std::size_t> off(n + 1, 0);
  std::vector<int> col;
  Vector val;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (dense[i * n + j] != 0.0) {
        col.push_back(static_cast<int>(j));
        val.push_back(dense[i * n + j]);
      }
    }
    off[i + 1] = col.size();
  }
  return SparseMatrix(n, std::move(off), std::move(col), std::move(val));
}

void SparseMatrix::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != n_ || y.size() != n_) throw ParameterError("spmv dimension mismatch");
  const long n = static_cast<long>(n_);
  const std::size_t* off = row_offsets_.data();
  const int* col = col_indices_.data();
  const double* val = values_.data();
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) s += val[k] * x[static_cast<std::size_t>(col[k])];
    y[static_cast<std::size_t>(i)] = s;
  }
}

Vector SparseMatrix::apply(std::span<const double> x) const {
  Vector y(n_);
  apply(x, y);
  return y;
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
  const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, static_cast<int>(j));
  if (it == last || *it != static_cast<int>(j)) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

Vector SparseMatrix::diagonal_entries() const {
  Vector d(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
  return d;
}

Vector SparseMatrix::row_sums() const {
  Vector s(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s[i] += values_[k];
  }
  return s;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double SparseMatrix::max_asymmetry() const {
  double m = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      const auto j = static_cast<std::size_t>(col_indices_[k]);
      m = std::max(m, std::abs(values_[k] - at(j, i)));
    }
  }
  return m;
}

SparseMatrix SparseMatrix::scaled(double alpha) const {
  SparseMatrix out = *this;
  for (double& v : out.values_) v *= alpha;
  return out;
}

std::vector<double> SparseMatrix::to_dense() const {
  std::vector<double> d(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
      d[i * n_ + static_cast<std::size_t>(col_indices_[k])] = values_[k];
    }
  }
  return d;
}

SparseMatrix add(const SparseMatrix& a, double alpha, const SparseMatrix& b, double beta) {
  if (a.size() != b.size()) throw ParameterError("matrix add dimension mismatch");
  const std::size_t n = a.size();
  const auto ao = a.row_offsets(), bo = b.row_offsets();
  const auto ac = a.col_indices(), bc = b.col_indices();
  const auto av = a.values(), bv = b.values();
  std::vector<std::size_t> off(n + 1, 0);
  std::vector<int> col;
  Vector val;
  col.reserve(std::max(a.nnz(), b.nnz()));
  val.reserve(col.capacity());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t p = ao[i], q = bo[i];
    while (p < ao[i + 1] || q < bo[i + 1]) {
      if (q == bo[i + 1] || (p < ao[i + 1] && ac[p] < bc[q])) {
        col.push_back(ac[p]);
        val.push_back(alpha * av[p++]);
      } else if (p == ao[i + 1] || bc[q] < ac[p]) {
        col.push_back(bc[q]);
        val.push_back(beta * bv[q++]);
      } else {
        col.push_back(ac[p]);
        val.push_back(alpha * av[p++] + beta * bv[q++]);
      }
    }
    off[i + 1] = col.size();
  }
  return SparseMatrix(n, std::move(off), std::move(col), std::move(val));
}

Vector spmv(const SparseMatrix& a, std::span<const double> x) { return a.apply(x); }

DiagonalMatrix::DiagonalMatrix(Vector entries) : entries_(std::move(entries)) {
  for (double e : entries_) {
    if (!(e > 0.0)) throw NumericalError("diagonal operator entry is not positive");
  }
}

void DiagonalMatrix::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != size() || y.size() != size()) throw ParameterError("diagonal dimension mismatch");
  const long n = static_cast<long>(size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) y[i] = entries_[static_cast<std::size_t>(i)] * x[i];
}

void DiagonalMatrix::apply_inverse(std::span<const double> x, std::span<double> y) const {
  if (x.size() != size() || y.size() != size()) throw ParameterError("diagonal dimension mismatch");
  const long n = static_cast<long>(size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) y[i] = x[i] / entries_[static_cast<std::size_t>(i)];
}

LinearOperator make_operator(std::shared_ptr<const SparseMatrix> a) {
  const std::size_t n = a->size();
  return {n, [a = std::move(a)](std::span<const double> x, std::span<double> y) { a->apply(x, y); }};
}

LinearOperator make_operator(const DiagonalMatrix& d) {
  return {d.size(), [d](std::span<const double> x, std::span<double> y) { d.apply(x, y); }};
}

} // namespace ocpfem::la
