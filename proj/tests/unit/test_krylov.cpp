#include "support.hpp"

#include "ocpfem/error.hpp"
#include "ocpfem/krylov.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ocpfem;
using testing_support::dense;
using testing_support::random_vector;
using testing_support::to_eigen;

namespace {

std::shared_ptr<const la::SparseMatrix> spd_matrix(std::size_t n, std::uint64_t seed, double shift = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd b(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) b(i, j) = u(rng);
  }
  Eigen::MatrixXd a = b * b.transpose() + shift * Eigen::MatrixXd::Identity(b.rows(), b.cols());
  std::vector<double> rm(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) rm[i * n + j] = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  return std::make_shared<const la::SparseMatrix>(la::SparseMatrix::from_dense(n, rm));
}

la::DiagonalMatrix jacobi(const la::SparseMatrix& a) { return la::DiagonalMatrix(a.diagonal_entries()); }

} // namespace

TEST(Pcg, IdentitySystemConvergesInOneIteration) {
  const std::size_t n = 10;
  auto a = std::make_shared<const la::SparseMatrix>(la::SparseMatrix::identity(n));
  const auto b = random_vector(n, 1);
  const auto res = la::pcg(la::make_operator(a), la::DiagonalMatrix(std::vector<double>(n, 1.0)), b,
                           std::vector<double>(n, 0.0));
  EXPECT_TRUE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 1u);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(res.x[i], b[i], 1e-15);
}

TEST(Pcg, PerfectlyPreconditionedDiagonalInOneIteration) {
  std::vector<double> d{1.0, 3.0, 10.0, 0.5};
  la::DiagonalMatrix p(d);
  const auto b = random_vector(4, 2);
  const auto res = la::pcg(la::make_operator(p), p, b, std::vector<double>(4, 0.0));
  EXPECT_EQ(res.report.iterations, 1u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(res.x[i], b[i] / d[i], 1e-15);
}

TEST(Pcg, MatchesDenseSolve) {
  for (std::size_t n : {20u, 80u, 200u}) {
    auto a = spd_matrix(n, 100 + n, static_cast<double>(n));
    const auto b = random_vector(n, n);
    la::KrylovOptions o;
    o.rel_tol = 1e-14;
    o.max_iters = 10 * n;
    const auto res = la::pcg(la::make_operator(a), jacobi(*a), b, std::vector<double>(n, 0.0), o);
    const Eigen::VectorXd ref = dense(*a).llt().solve(to_eigen(b));
    EXPECT_LE((to_eigen(res.x) - ref).norm(), 1e-10 * ref.norm()) << "n = " << n;
  }
}

TEST(Pcg, StopsOnRelativePreconditionedResidual) {
  auto s = testing_support::space(8, 2);
  auto k = std::make_shared<const la::SparseMatrix>(fem::assemble_stiffness(*s));
  const auto b = random_vector(k->size(), 3);
  la::KrylovOptions o;
  o.rel_tol = 1e-6;
  const auto p = jacobi(*k);
  const auto res = la::pcg(la::make_operator(k), p, b, std::vector<double>(k->size(), 0.0), o);
  ASSERT_TRUE(res.report.converged);
  // Independent check of the stopping rule with the true residual.
  auto r = b;
  const auto ax = k->apply(res.x);
  double rr = 0.0, r0 = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    r[i] -= ax[i];
    rr += r[i] * r[i] / p[i];
    r0 += b[i] * b[i] / p[i];
  }
  EXPECT_LE(std::sqrt(rr), 1e-6 * std::sqrt(r0) * (1 + 1e-8));
  EXPECT_LE(res.report.final_residual, 1e-6 * res.report.initial_residual);
  EXPECT_EQ(res.report.residual_history.size(), res.report.iterations + 1);
  EXPECT_DOUBLE_EQ(res.report.residual_history.front(), res.report.initial_residual);
}

TEST(Pcg, EnergyErrorStrictlyDecreases) {
  const std::size_t n = 40;
  auto a = spd_matrix(n, 7, 0.5);
  const auto b = random_vector(n, 8);
  const Eigen::MatrixXd ad = dense(*a);
  const Eigen::VectorXd xs = ad.llt().solve(to_eigen(b));
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= 25; ++k) {
    la::KrylovOptions o;
    o.rel_tol = 1e-15;
    o.max_iters = k;
    const auto res = la::pcg(la::make_operator(a), jacobi(*a), b, std::vector<double>(n, 0.0), o);
    const Eigen::VectorXd e = to_eigen(res.x) - xs;
    const double en = std::sqrt(e.dot(ad * e));
    EXPECT_LT(en, prev) << "iteration " << k;
    prev = en;
  }
}

TEST(Pcg, TerminatesWithinDimension) {
  for (std::size_t n : {5u, 12u, 30u}) {
    auto a = spd_matrix(n, 30 + n, static_cast<double>(n));
    const auto b = random_vector(n, 40 + n);
    la::KrylovOptions o;
    o.rel_tol = 1e-12;
    o.max_iters = 10 * n;
    const auto res = la::pcg(la::make_operator(a), jacobi(*a), b, std::vector<double>(n, 0.0), o);
    EXPECT_TRUE(res.report.converged);
    EXPECT_LE(res.report.iterations, n);
  }
}

TEST(Pcg, NonConvergenceIsFlagged) {
  auto s = testing_support::space(16, 2);
  auto k = std::make_shared<const la::SparseMatrix>(fem::assemble_stiffness(*s));
  la::KrylovOptions o;
  o.max_iters = 3;
  const auto b = random_vector(k->size(), 1);
  const auto res = la::pcg(la::make_operator(k), jacobi(*k), b, std::vector<double>(k->size(), 0.0), o);
  EXPECT_FALSE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 3u);
  EXPECT_EQ(res.x.size(), k->size());
}

TEST(Pcg, IndefiniteOperatorIsHardError) {
  auto a = std::make_shared<const la::SparseMatrix>(la::SparseMatrix::diagonal(std::vector<double>{1.0, -1.0}));
  EXPECT_THROW(la::pcg(la::make_operator(a), la::DiagonalMatrix(std::vector<double>{1.0, 1.0}),
                       std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 0.0}),
               NumericalError);
}

TEST(Pcg, ZeroRightHandSideReturnsImmediately) {
  auto a = spd_matrix(6, 1);
  const auto res = la::pcg(la::make_operator(a), jacobi(*a), std::vector<double>(6, 0.0), std::vector<double>(6, 0.0));
  EXPECT_TRUE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 0u);
}

TEST(Pcg, RejectsBadTolerance) {
  auto a = spd_matrix(3, 1);
  la::KrylovOptions o;
  o.rel_tol = 1.5;
  EXPECT_THROW(la::pcg(la::make_operator(a), jacobi(*a), std::vector<double>(3, 1.0), std::vector<double>(3, 0.0), o),
               ParameterError);
}

TEST(Minres, IdentitySystemOneIteration) {
  auto a = std::make_shared<const la::SparseMatrix>(la::SparseMatrix::identity(5));
  const auto b = random_vector(5, 2);
  const auto res = la::minres(la::make_operator(a), la::DiagonalMatrix(std::vector<double>(5, 1.0)), b,
                              std::vector<double>(5, 0.0));
  EXPECT_EQ(res.report.iterations, 1u);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(res.x[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)], 1e-15);
}

TEST(Minres, TwoByTwoIndefinite) {
  auto a = std::make_shared<const la::SparseMatrix>(la::SparseMatrix::from_dense(2, std::vector<double>{0, 1, 1, 0}));
  la::KrylovOptions o;
  o.rel_tol = 1e-12;
  const auto res = la::minres(la::make_operator(a), la::DiagonalMatrix(std::vector<double>{1, 1}),
                              std::vector<double>{1, 0}, std::vector<double>{0, 0}, o);
  EXPECT_TRUE(res.report.converged);
  EXPECT_LE(res.report.iterations, 2u);
  EXPECT_NEAR(res.x[0], 0.0, 1e-14);
  EXPECT_NEAR(res.x[1], 1.0, 1e-14);
}

TEST(Minres, IndefiniteMatchesDenseSolveWithMonotoneResidual) {
  // [[A, B], [B^T, -C]] with SPD A and C.
  const std::size_t n = 60;
  auto a = spd_matrix(n, 3, 1.0), c = spd_matrix(n, 4, 1.0);
  const auto bm = testing_support::random_vector(n * n, 5);
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const Eigen::Index N = static_cast<Eigen::Index>(n);
  full.topLeftCorner(N, N) = dense(*a);
  full.bottomRightCorner(N, N) = -dense(*c);
  Eigen::MatrixXd bb = Eigen::Map<const Eigen::MatrixXd>(bm.data(), N, N);
  full.topRightCorner(N, N) = bb;
  full.bottomLeftCorner(N, N) = bb.transpose();
  std::vector<double> rm(4 * n * n);
  for (Eigen::Index i = 0; i < 2 * N; ++i) {
    for (Eigen::Index j = 0; j < 2 * N; ++j) rm[static_cast<std::size_t>(i * 2 * N + j)] = full(i, j);
  }
  auto s = std::make_shared<const la::SparseMatrix>(la::SparseMatrix::from_dense(2 * n, rm));
  const auto b = random_vector(2 * n, 6);
  std::vector<double> pd(2 * n);
  for (std::size_t i = 0; i < 2 * n; ++i) pd[i] = std::abs(s->at(i, i));
  la::KrylovOptions o;
  o.rel_tol = 1e-13;
  o.max_iters = 2000;
  const auto res = la::minres(la::make_operator(s), la::DiagonalMatrix(pd), b, std::vector<double>(2 * n, 0.0), o);
  ASSERT_TRUE(res.report.converged);
  const Eigen::VectorXd ref = full.partialPivLu().solve(to_eigen(b));
  EXPECT_LE((to_eigen(res.x) - ref).norm(), 1e-10 * ref.norm());
  const auto& h = res.report.residual_history;
  for (std::size_t k = 1; k < h.size(); ++k) EXPECT_LE(h[k], h[k - 1] * (1 + 1e-12)) << "step " << k;
}

TEST(Minres, SpdSystemAgreesWithPcg) {
  auto a = spd_matrix(50, 9, 5.0);
  const auto b = random_vector(50, 10);
  la::KrylovOptions o;
  o.rel_tol = 1e-12;
  const auto x1 = la::pcg(la::make_operator(a), jacobi(*a), b, std::vector<double>(50, 0.0), o).x;
  const auto x2 = la::minres(la::make_operator(a), jacobi(*a), b, std::vector<double>(50, 0.0), o).x;
  EXPECT_LE((to_eigen(x1) - to_eigen(x2)).norm(), 1e-9 * to_eigen(x1).norm());
}

TEST(Minres, NonConvergenceIsFlagged) {
  auto a = spd_matrix(40, 11, 0.01);
  la::KrylovOptions o;
  o.max_iters = 2;
  const auto res = la::minres(la::make_operator(a), jacobi(*a), random_vector(40, 1), std::vector<double>(40, 0.0), o);
  EXPECT_FALSE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 2u);
}
