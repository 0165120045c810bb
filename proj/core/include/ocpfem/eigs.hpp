#pragma once

#include "ocpfem/sparse.hpp"

#include <cstdint>

namespace ocpfem::la {

struct EigOptions {
  std::size_t dense_threshold = 600;
  std::size_t lanczos_steps = 200;
  /// Ritz pairs count as certified when their residual is below this fraction
  /// of the Ritz value (three significant digits).
  double certify_rel = 1e-3;
  std::uint64_t seed = 12345;
};

struct EigenBounds {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  bool dense = false;
  /// Lanczos only: both extremal Ritz residuals met certify_rel.
  bool certified = true;
  double residual_min = 0.0;
  double residual_max = 0.0;
  std::size_t steps = 0;
};

/// Extremal eigenvalues of the pencil (A, P), i.e. of P^{-1/2} A P^{-1/2}.
/// Uses a dense symmetric eigensolve when size <= dense_threshold and
/// Lanczos with full reorthogonalization otherwise.
EigenBounds extremal_generalized_eigs(const LinearOperator& a, const DiagonalMatrix& p,
                                      const EigOptions& opts = {});

/// Same for an explicitly given dense symmetric matrix (row-major n x n).
EigenBounds extremal_generalized_eigs_dense(std::span<const double> a, std::size_t n,
                                            const DiagonalMatrix& p);

/// All eigenvalues of a dense symmetric matrix, ascending.
std::vector<double> symmetric_eigenvalues(std::span<const double> a, std::size_t n);

/// Dense columns of an operator: column j = A e_j, returned row-major.
std::vector<double> dense_from_operator(const LinearOperator& a);

} // namespace ocpfem::la
