#include "ocpfem/krylov.hpp"

#include "ocpfem/error.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace ocpfem::la {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_inputs(const LinearOperator& a, const DiagonalMatrix& p, std::span<const double> b,
                  std::span<const double> x0, const KrylovOptions& opts) {
  if (a.size != b.size() || a.size != x0.size() || a.size != p.size()) {
    throw ParameterError("Krylov solver dimension mismatch");
  }
  if (!(opts.rel_tol > 0.0 && opts.rel_tol < 1.0)) throw ParameterError("rel_tol must lie in (0,1)");
}

} // namespace

KrylovResult pcg(const LinearOperator& a, const DiagonalMatrix& precond, std::span<const double> b,
                 std::span<const double> x0, const KrylovOptions& opts) {
  check_inputs(a, precond, b, x0, opts);
  const auto t0 = Clock::now();
  const std::size_t n = b.size();
  KrylovResult out;
  auto& rep = out.report;
  Vector& x = out.x;
  x.assign(x0.begin(), x0.end());

  Vector r(n), z(n), p(n), q(n);
  a.apply(x, q);
  subtract(b, q, r);
  precond.apply_inverse(r, z);
  double rz = dot(r, z);
  rep.initial_residual = std::sqrt(std::max(rz, 0.0));
  rep.final_residual = rep.initial_residual;
  rep.residual_history.push_back(rep.initial_residual);
  if (rep.initial_residual == 0.0) {
    rep.converged = true;
    rep.wall_time = seconds_since(t0);
    return out;
  }
  const double target = opts.rel_tol * rep.initial_residual;
  copy(z, p);

  for (std::size_t k = 1; k <= opts.max_iters; ++k) {
    a.apply(p, q);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) {
      throw NumericalError("PCG: operator is not positive definite (p.Ap = " + std::to_string(pq) + ")");
    }
    const double alpha = rz / pq;
    axpy(alpha, p, x);
    if (opts.residual_refresh > 0 && k % opts.residual_refresh == 0) {
      a.apply(x, q);
      subtract(b, q, r);
    } else {
      axpy(-alpha, q, r);
    }
    precond.apply_inverse(r, z);
    const double rz_new = dot(r, z);
    rep.iterations = k;
    rep.final_residual = std::sqrt(std::max(rz_new, 0.0));
    rep.residual_history.push_back(rep.final_residual);
    if (rep.final_residual <= target) {
      rep.converged = true;
      break;
    }
    xpby(z, rz_new / rz, p);
    rz = rz_new;
  }
  rep.wall_time = seconds_since(t0);
  return out;
}

KrylovResult minres(const LinearOperator& a, const DiagonalMatrix& precond, std::span<const double> b,
                    std::span<const double> x0, const KrylovOptions& opts) {
  check_inputs(a, precond, b, x0, opts);
  const auto t0 = Clock::now();
  const std::size_t n = b.size();
  KrylovResult out;
  auto& rep = out.report;
  Vector& x = out.x;
  x.assign(x0.begin(), x0.end());

  // Lanczos vectors v (unpreconditioned) and z = P^{-1} v, three-term window.
  Vector v_prev(n, 0.0), v(n), v_next(n), z(n), az(n);
  Vector w_prev(n, 0.0), w(n, 0.0), w_next(n);

  a.apply(x, az);
  subtract(b, az, v);
  precond.apply_inverse(v, z);
  const double g2 = dot(z, v);
  if (g2 < 0.0) throw NumericalError("MINRES: preconditioner is not positive definite");
  double gamma = std::sqrt(g2);
  double gamma_prev = 1.0;
  rep.initial_residual = gamma;
  rep.final_residual = gamma;
  rep.residual_history.push_back(gamma);
  if (gamma == 0.0) {
    rep.converged = true;
    rep.wall_time = seconds_since(t0);
    return out;
  }
  const double target = opts.rel_tol * rep.initial_residual;

  double eta = gamma;
  double s_prev = 0.0, s = 0.0, c_prev = 1.0, c = 1.0;

  for (std::size_t k = 1; k <= opts.max_iters; ++k) {
    scale(1.0 / gamma, z);
    a.apply(z, az);
    const double delta = dot(az, z);

    // v_next = A z - (delta/gamma) v - (gamma/gamma_prev) v_prev
    const long nl = static_cast<long>(n);
    const double c1 = delta / gamma, c2 = gamma / gamma_prev;
#pragma omp parallel for schedule(static)
    for (long i = 0; i < nl; ++i) v_next[i] = az[i] - c1 * v[i] - c2 * v_prev[i];

    Vector z_next(n);
    precond.apply_inverse(v_next, z_next);
    const double gn2 = dot(z_next, v_next);
    if (gn2 < 0.0) throw NumericalError("MINRES: preconditioner is not positive definite");
    const double gamma_next = std::sqrt(gn2);

    const double alpha0 = c * delta - c_prev * s * gamma;
    const double alpha1 = std::sqrt(alpha0 * alpha0 + gamma_next * gamma_next);
    const double alpha2 = s * delta + c_prev * c * gamma;
    const double alpha3 = s_prev * gamma;
    if (alpha1 == 0.0) throw NumericalError("MINRES breakdown: singular tridiagonal projection");
    const double c_next = alpha0 / alpha1;
    const double s_next = gamma_next / alpha1;

#pragma omp parallel for schedule(static)
    for (long i = 0; i < nl; ++i) w_next[i] = (z[i] - alpha3 * w_prev[i] - alpha2 * w[i]) / alpha1;
    axpy(c_next * eta, w_next, x);
    eta = -s_next * eta;

    rep.iterations = k;
    rep.final_residual = std::abs(eta);
    rep.residual_history.push_back(rep.final_residual);
    if (rep.final_residual <= target) {
      rep.converged = true;
      break;
    }
    if (gamma_next == 0.0) {
      throw NumericalError("MINRES breakdown: Lanczos terminated with nonzero residual");
    }

    std::swap(v_prev, v);
    std::swap(v, v_next);
    z = std::move(z_next);
    std::swap(w_prev, w);
    std::swap(w, w_next);
    gamma_prev = gamma;
    gamma = gamma_next;
    s_prev = s;
    s = s_next;
    c_prev = c;
    c = c_next;
  }
  rep.wall_time = seconds_since(t0);
  return out;
}

} // namespace ocpfem::la
