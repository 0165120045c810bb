#pragma once

#include "ocpfem/sparse.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace ocpfem::la {

struct KrylovOptions {
  double rel_tol = 1e-6;
  std::size_t max_iters = 1000;
  /// PCG replaces the recursive residual by b - A x every this many steps.
  std::size_t residual_refresh = 50;
};

/// Residual norms are measured in the preconditioned norm sqrt(r . P^{-1} r).
struct KrylovReport {
  std::size_t iterations = 0;
  double initial_residual = 0.0;
  double final_residual = 0.0;
  std::vector<double> residual_history;
  bool converged = false;
  double wall_time = 0.0;
};

struct KrylovResult {
  Vector x;
  KrylovReport report;
};

/// Preconditioned conjugate gradients with a diagonal preconditioner.
///
/// Stops once sqrt(r.P^{-1}r) <= rel_tol * sqrt(r0.P^{-1}r0). If max_iters is
/// reached the last iterate is returned with converged = false; for SPD
/// operators it is also the iterate with the smallest energy-norm error.
/// Throws NumericalError when a search direction has p.Ap <= 0.
KrylovResult pcg(const LinearOperator& a, const DiagonalMatrix& precond, std::span<const double> b,
                 std::span<const double> x0, const KrylovOptions& opts = {});

/// Preconditioned MINRES for symmetric, possibly indefinite operators with an
/// SPD diagonal (or block-diagonal, stored as one diagonal) preconditioner.
/// The residual estimate is the preconditioned norm of the true residual in
/// exact arithmetic and is non-increasing.
KrylovResult minres(const LinearOperator& a, const DiagonalMatrix& precond, std::span<const double> b,
                    std::span<const double> x0, const KrylovOptions& opts = {});

} // namespace ocpfem::la
