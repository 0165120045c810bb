#include "ocpfem/vector_ops.hpp"

#include "ocpfem/error.hpp"
#include "ocpfem/parallel.hpp"

#include <omp.h>

#include <cmath>
#include <cstddef>

namespace ocpfem::la {

namespace {

template <class F>
double blocked_reduce(std::size_t n, F&& term) {
  if (n == 0) return 0.0;
  const long nl = static_cast<long>(n);
  if (par::strict_deterministic()) {
    const std::size_t nblocks = (n + par::kReductionBlock - 1) / par::kReductionBlock;
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
    for (long b = 0; b < static_cast<long>(nblocks); ++b) {
      const std::size_t lo = static_cast<std::size_t>(b) * par::kReductionBlock;
      const std::size_t hi = std::min(n, lo + par::kReductionBlock);
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += term(i);
      partial[static_cast<std::size_t>(b)] = s;
    }
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
  }
  const int nt = par::num_threads();
  std::vector<double> partial(static_cast<std::size_t>(nt), 0.0);
#pragma omp parallel num_threads(nt)
  {
    const int t = omp_get_thread_num();
    const int team = omp_get_num_threads();
    const long lo = nl * t / team;
    const long hi = nl * (t + 1) / team;
    double s = 0.0;
    for (long i = lo; i < hi; ++i) s += term(static_cast<std::size_t>(i));
    partial[static_cast<std::size_t>(t)] = s;
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

void check_same(std::size_t a, std::size_t b) {
  if (a != b) throw ParameterError("vector length mismatch");
}

} // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  check_same(a.size(), b.size());
  return blocked_reduce(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double sum(std::span<const double> a) {
  return blocked_reduce(a.size(), [&](std::size_t i) { return a[i]; });
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same(x.size(), y.size());
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  check_same(x.size(), y.size());
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void subtract(std::span<const double> x, std::span<const double> y, std::span<double> z) {
  check_same(x.size(), y.size());
  check_same(x.size(), z.size());
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) z[i] = x[i] - y[i];
}

void scale(double alpha, std::span<double> x) {
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) x[i] *= alpha;
}

void copy(std::span<const double> x, std::span<double> y) {
  check_same(x.size(), y.size());
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) y[i] = x[i];
}

void fill(std::span<double> x, double value) {
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) x[i] = value;
}

} // namespace ocpfem::la
