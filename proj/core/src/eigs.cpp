#include "ocpfem/eigs.hpp"

#include "ocpfem/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace ocpfem::la {

std::vector<double> symmetric_eigenvalues(std::span<const double> a, std::size_t n) {
  if (a.size() != n * n) throw ParameterError("dense size mismatch");
  const auto ni = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd m(ni, ni);
  for (Eigen::Index i = 0; i < ni; ++i) {
    for (Eigen::Index j = 0; j < ni; ++j) {
      const auto ij = static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j);
      const auto ji = static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i);
      m(i, j) = 0.5 * (a[ij] + a[ji]);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

std::vector<double> dense_from_operator(const LinearOperator& a) {
  const std::size_t n = a.size;
  std::vector<double> d(n * n);
  Vector e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    a.apply(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) d[i * n + j] = col[i];
  }
  return d;
}

EigenBounds extremal_generalized_eigs_dense(std::span<const double> a, std::size_t n,
                                            const DiagonalMatrix& p) {
  if (p.size() != n) throw ParameterError("pencil dimension mismatch");
  std::vector<double> c(a.begin(), a.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] /= std::sqrt(p[i] * p[j]);
  }
  const auto ev = symmetric_eigenvalues(c, n);
  EigenBounds out;
  out.dense = true;
  out.lambda_min = ev.front();
  out.lambda_max = ev.back();
  return out;
}

EigenBounds extremal_generalized_eigs(const LinearOperator& a, const DiagonalMatrix& p,
                                      const EigOptions& opts) {
  const std::size_t n = a.size;
  if (p.size() != n || n == 0) throw ParameterError("pencil dimension mismatch");
  if (n <= opts.dense_threshold) {
    return extremal_generalized_eigs_dense(dense_from_operator(a), n, p);
  }

  Vector inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(p[i]);
  auto apply_c = [&](std::span<const double> x, std::span<double> y) {
    Vector t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = inv_sqrt[i] * x[i];
    a.apply(t, y);
    for (std::size_t i = 0; i < n; ++i) y[i] *= inv_sqrt[i];
  };

  const std::size_t m = std::min(opts.lanczos_steps, n);
  std::vector<Vector> basis;
  basis.reserve(m + 1);
  std::vector<double> alpha, beta;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd;
  Vector q(n);
  for (auto& v : q) v = nd(rng);
  scale(1.0 / norm2(q), q);
  basis.push_back(q);

  Vector w(n);
  for (std::size_t k = 0; k < m; ++k) {
    apply_c(basis[k], w);
    const double ak = dot(w, basis[k]);
    alpha.push_back(ak);
    // Full reorthogonalization, applied twice.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) axpy(-dot(w, b), b, w);
    }
    const double bk = norm2(w);
    if (k + 1 == m || bk <= 1e-14 * std::abs(ak)) {
      beta.push_back(bk);
      break;
    }
    beta.push_back(bk);
    scale(1.0 / bk, w);
    basis.push_back(w);
  }

  const auto steps = static_cast<Eigen::Index>(alpha.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(steps, steps);
  for (Eigen::Index i = 0; i < steps; ++i) {
    t(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < steps) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  if (es.info() != Eigen::Success) throw NumericalError("Lanczos tridiagonal eigensolve failed");
  const double last_beta = beta.back();
  EigenBounds out;
  out.dense = false;
  out.steps = alpha.size();
  out.lambda_min = es.eigenvalues()(0);
  out.lambda_max = es.eigenvalues()(steps - 1);
  out.residual_min = std::abs(last_beta * es.eigenvectors()(steps - 1, 0));
  out.residual_max = std::abs(last_beta * es.eigenvectors()(steps - 1, steps - 1));
  out.certified = out.residual_min <= opts.certify_rel * std::abs(out.lambda_min) &&
                  out.residual_max <= opts.certify_rel * std::abs(out.lambda_max);
  return out;
}

} // namespace ocpfem::la
