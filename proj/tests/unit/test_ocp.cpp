#include "support.hpp"

#include "ocpfem/error.hpp"
#include "ocpfem/ocp.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ocpfem;
using namespace ocpfem::ocp;
using testing_support::dense;
using testing_support::random_vector;
using testing_support::to_eigen;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) { return to_eigen(a).dot(to_eigen(b)); }

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  return (to_eigen(a) - to_eigen(b)).norm() / std::max(to_eigen(b).norm(), 1e-300);
}

la::KrylovOptions tight(double tol = 1e-12, std::size_t its = 20000) {
  la::KrylovOptions o;
  o.rel_tol = tol;
  o.max_iters = its;
  return o;
}

} // namespace

TEST(Regularization, ExponentsAndValidation) {
  EXPECT_EQ(Regularization::energy_adapted().exponent(), 2);
  EXPECT_EQ(Regularization::l2_adapted().exponent(), 4);
  EXPECT_THROW(Regularization::energy_constant(0.0).validate(), ParameterError);
  EXPECT_THROW(Regularization::l2_constant(-1.0).validate(), ParameterError);
  EXPECT_NO_THROW(Regularization::l2_constant(0.5).validate());
  EXPECT_EQ(to_string(RegKind::Energy), "energy");
  EXPECT_EQ(to_string(Form::SaddlePoint), "saddle");
}

TEST(Regularization, ElementRho) {
  const auto m = mesh::build_unit_cube_mesh(4, 3);
  for (double r : element_rho(m, Regularization::energy_adapted())) EXPECT_NEAR(r, 1.0 / 16, 1e-15);
  for (double r : element_rho(m, Regularization::l2_adapted())) EXPECT_NEAR(r, 1.0 / 256, 1e-16);
  for (double r : element_rho(m, Regularization::energy_constant(0.3))) EXPECT_EQ(r, 0.3);
  auto diam = Regularization::energy_adapted();
  diam.size_measure = mesh::SizeMeasure::Diameter;
  for (double r : element_rho(m, diam)) EXPECT_NEAR(r, 3.0 / 16, 1e-15);
}

TEST(PrimalSystem, ConstantRhoIsScaledStiffnessPlusMass) {
  auto s = testing_support::space(4, 3);
  const auto sys = build_primal_system(s, Regularization::energy_constant(0.07), fem::BoxTarget::centered(3));
  const auto ref = la::add(fem::assemble_stiffness(*s), 0.07, fem::assemble_mass(*s), 1.0);
  const Eigen::MatrixXd diff = dense(*sys.primal_matrix) - dense(ref);
  EXPECT_LE(diff.cwiseAbs().maxCoeff(), 1e-14 * ref.max_abs());
  EXPECT_EQ(sys.rhs, fem::assemble_load_box_target(*s, fem::BoxTarget::centered(3)));
  EXPECT_EQ(sys.size(), s->size());
}

TEST(PrimalSystem, VanishingRhoGivesL2Projection) {
  auto s = testing_support::space(6, 2);
  const auto t = fem::BoxTarget::centered(2);
  const auto sys = build_primal_system(s, Regularization::energy_constant(1e-14), t);
  const auto out = solve(sys, {}, tight());
  const auto m = fem::assemble_mass(*s);
  const Eigen::VectorXd proj = dense(m).llt().solve(to_eigen(sys.rhs));
  EXPECT_LE((to_eigen(out.y) - proj).norm(), 1e-8 * proj.norm());
}

TEST(PrimalSystem, RejectsL2Regularization) {
  auto s = testing_support::space(3, 2);
  EXPECT_THROW(build_primal_system(s, Regularization::l2_adapted(), fem::BoxTarget::centered(2)), ParameterError);
}

TEST(RegularizationBlockTest, EnergyConstantIsScaledStiffness) {
  auto s = testing_support::space(4, 3);
  const auto a = RegularizationBlock::build(*s, Regularization::energy_constant(0.25), {});
  ASSERT_FALSE(a->is_diagonal());
  const auto k = fem::assemble_stiffness(*s);
  ASSERT_EQ(a->matrix()->nnz(), k.nnz());
  for (std::size_t q = 0; q < k.nnz(); ++q) {
    EXPECT_NEAR(a->matrix()->values()[q], 4.0 * k.values()[q], 1e-14 * std::abs(4.0 * k.values()[q]));
  }
}

TEST(RegularizationBlockTest, InnerNonConvergenceIsHardError) {
  auto s = testing_support::space(8, 3);
  SystemOptions o;
  o.inner_max_iters = 1;
  const auto a = RegularizationBlock::build(*s, Regularization::energy_adapted(), o);
  const auto x = random_vector(s->size(), 1);
  std::vector<double> y(x.size());
  EXPECT_THROW(a->apply_inverse(x, y), NumericalError);
}

TEST(RegularizationBlockTest, L2LumpedIsDiagonalAndExact) {
  auto s = testing_support::space(5, 2);
  const auto a = RegularizationBlock::build(*s, Regularization::l2_constant(0.01), {});
  ASSERT_TRUE(a->is_diagonal());
  const auto d = fem::lump_mass(fem::assemble_mass(*s));
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_NEAR(a->diagonal()[i], d[i] / 0.01, 1e-12 * d[i] / 0.01);
  const auto x = random_vector(s->size(), 2);
  std::vector<double> ax(x.size()), back(x.size());
  a->apply(x, ax);
  a->apply_inverse(ax, back);
  EXPECT_LE(rel_diff(back, x), 1e-15);
}

TEST(SchurOperator, L2LumpedMatchesExplicitTripleProduct) {
  for (int d = 1; d <= 3; ++d) {
    auto s = testing_support::space(d == 3 ? 4 : 7, d);
    const double rho = 0.003;
    const auto sys = build_schur_operator(s, Regularization::l2_constant(rho), fem::BoxTarget::centered(d));
    const Eigen::MatrixXd k = dense(fem::assemble_stiffness(*s));
    const Eigen::MatrixXd m = dense(fem::assemble_mass(*s));
    const Eigen::VectorXd dl = m.rowwise().sum();
    const Eigen::MatrixXd sref = rho * k * dl.cwiseInverse().asDiagonal() * k + m;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto v = random_vector(s->size(), seed);
      const Eigen::VectorXd ref = sref * to_eigen(v);
      EXPECT_LE((to_eigen(sys.op(v)) - ref).norm(), 1e-12 * ref.norm()) << "d=" << d;
    }
  }
}

TEST(SchurOperator, EnergyConstantRhoIsDiffusionOperator) {
  auto s = testing_support::space(6, 2, 1);
  for (double rho : {1.0 / 144, 0.1, 1.0}) {
    const auto sys = build_schur_operator(s, Regularization::energy_constant(rho), fem::BoxTarget::centered(2));
    const auto p = la::add(fem::assemble_stiffness(*s), rho, fem::assemble_mass(*s), 1.0);
    const auto v = random_vector(s->size(), 3);
    EXPECT_LE(rel_diff(sys.op(v), p.apply(v)), 1e-9) << "rho=" << rho;
    EXPECT_EQ(sys.op(std::vector<double>(s->size(), 0.0)), std::vector<double>(s->size(), 0.0));
  }
}

TEST(SchurOperator, L2OperatorIsPositiveDefinite) {
  auto s = testing_support::space(5, 3);
  for (bool lumped : {true, false}) {
    auto reg = Regularization::l2_adapted();
    reg.lumped = lumped;
    const auto sys = build_schur_operator(s, reg, fem::BoxTarget::centered(3));
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto x = random_vector(s->size(), 1000 + seed);
      EXPECT_GT(dot(x, sys.op(x)), 0.0);
    }
  }
}

TEST(SaddleSystem, BlockSymmetry) {
  auto s = testing_support::space(5, 2);
  for (const auto& reg : {Regularization::energy_adapted(), Regularization::l2_adapted()}) {
    const auto sys = build_saddle_system(s, reg, fem::BoxTarget::centered(2));
    ASSERT_EQ(sys.size(), 2 * s->size());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto x = random_vector(sys.size(), seed), z = random_vector(sys.size(), 50 + seed);
      const double a = dot(sys.op(x), z), b = dot(x, sys.op(z));
      EXPECT_NEAR(a, b, 1e-13 * std::max(1.0, std::abs(a)));
    }
    const auto rhs = split_saddle(sys.rhs);
    EXPECT_EQ(rhs.p, std::vector<double>(s->size(), 0.0));
  }
}

TEST(SaddleSystem, EliminationReproducesSchurComplement) {
  auto s = testing_support::space(5, 2, 1);
  for (const auto& reg : {Regularization::energy_adapted(), Regularization::l2_adapted()}) {
    const auto t = fem::BoxTarget::centered(2);
    const auto saddle = build_saddle_system(s, reg, t);
    const auto schur = build_schur_operator(s, reg, t);
    const auto k = fem::assemble_stiffness(*s);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto y = random_vector(s->size(), seed);
      // p = -A^{-1} K y zeroes the first block row; the second row is then -S y.
      const auto ky = k.apply(y);
      std::vector<double> p(ky.size());
      saddle.regularization->apply_inverse(ky, p);
      for (double& x : p) x = -x;
      const auto r = split_saddle(saddle.op(join_saddle(p, y)));
      EXPECT_LE(to_eigen(r.p).norm(), 1e-9 * to_eigen(ky).norm());
      const auto sy = schur.op(y);
      auto neg = r.y;
      for (double& x : neg) x = -x;
      EXPECT_LE(rel_diff(neg, sy), 1e-9);
    }
  }
}

TEST(Forms, AllThreeAgreeForConstantEnergyRho) {
  auto s = testing_support::space(8, 2);
  const auto reg = Regularization::energy_constant(1.0 / 64);
  const auto t = fem::BoxTarget::centered(2);
  const auto mass = fem::assemble_mass(*s);
  const auto yp = solve(build_system(Form::DiffusionPrimal, s, reg, t), {}, tight()).y;
  const auto ys = solve(build_system(Form::SchurComplement, s, reg, t), {}, tight()).y;
  const auto out = solve(build_system(Form::SaddlePoint, s, reg, t), {}, tight(1e-10));
  ASSERT_TRUE(out.report.converged);
  const auto m_norm = [&](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return std::sqrt(dot(d, mass.apply(d)));
  };
  EXPECT_LE(m_norm(yp, out.y), 1e-7);
  EXPECT_LE(m_norm(yp, ys), 1e-7);
  EXPECT_EQ(out.y, split_saddle(out.solution).y);
}

TEST(Forms, AdaptedRhoSchurAndSaddleAgree) {
  auto s = testing_support::space(6, 3);
  const auto t = fem::BoxTarget::centered(3);
  for (const auto& reg : {Regularization::energy_adapted(), Regularization::l2_adapted()}) {
    const auto ys = solve(build_schur_operator(s, reg, t), {}, tight()).y;
    const auto yd = solve(build_saddle_system(s, reg, t), {}, tight(1e-11)).y;
    EXPECT_LE(rel_diff(yd, ys), 1e-7) << to_string(reg.kind);
  }
}

TEST(RecoverControl, Definitions) {
  auto s = testing_support::space(5, 2);
  const double rho = 0.2;
  const auto a = RegularizationBlock::build(*s, Regularization::energy_constant(rho), {});
  EXPECT_EQ(recover_control(*a, std::vector<double>(s->size(), 0.0)), std::vector<double>(s->size(), 0.0));
  const auto p = random_vector(s->size(), 4);
  const auto u = recover_control(*a, p);
  auto ref = fem::assemble_stiffness(*s).apply(p);
  for (double& x : ref) x = -x / rho;
  EXPECT_LE(rel_diff(u, ref), 1e-14);
  std::vector<double> ainv_u(u.size());
  a->apply_inverse(u, ainv_u);
  std::vector<double> ap(p.size());
  a->apply(p, ap);
  EXPECT_NEAR(dot(u, ainv_u), dot(p, ap), 1e-9 * dot(p, ap));
}

TEST(SchurIdentity, HoldsForConstantRho) {
  for (int d : {2, 3}) {
    auto s = testing_support::space(d == 2 ? 8 : 4, d);
    for (double rho : {1.0 / 64, 0.1, 1.0}) EXPECT_LE(verify_schur_identity(s, rho), 1e-9) << d << " " << rho;
  }
}

TEST(SchurIdentity, DiscriminatesWrongRho) {
  auto s = testing_support::space(6, 2);
  EXPECT_GT(schur_identity_deviation(s, 1.0, 2.0), 0.1);
  EXPECT_LE(schur_identity_deviation(s, 1.0, 1.0), 1e-9);
}

TEST(Spectral, OneDimensionalHandOracle) {
  // n = 3: two free dofs, h = 1/3, rho = h^2. D^{-1}M has eigenvalues 1 and
  // 3/5; D^{-1}(h^2 K) has 6/5 and 18/5 on the same eigenvectors.
  auto s = testing_support::space(3, 1);
  const auto r = verify_spectral_equivalence(s, Regularization::energy_adapted());
  EXPECT_TRUE(r.dense);
  EXPECT_NEAR(r.lambda_min_mass, 0.6, 1e-13);
  EXPECT_NEAR(r.lambda_max_mass, 1.0, 1e-13);
  EXPECT_NEAR(r.lambda_min, 2.2, 1e-12);
  EXPECT_NEAR(r.lambda_max, 4.2, 1e-12);
  EXPECT_NEAR(r.c_inv * r.c_inv, 3.6, 1e-12);
  EXPECT_NEAR(r.upper_bound, 4.6, 1e-12);
  EXPECT_NEAR(r.lower_bound, 1.0 / 3, 1e-15);
  EXPECT_TRUE(r.lower_ok);
  EXPECT_TRUE(r.upper_ok);
}

class SpectralDims : public ::testing::TestWithParam<int> {};

TEST_P(SpectralDims, BoundsHoldForEnergyAndL2) {
  const int d = GetParam();
  const int n = d == 1 ? 30 : (d == 2 ? 12 : 6);
  auto s = testing_support::space(n, d);
  auto consistent = Regularization::l2_adapted();
  consistent.lumped = false;
  for (const auto& reg : {Regularization::energy_adapted(), Regularization::l2_adapted(), consistent}) {
    const auto r = verify_spectral_equivalence(s, reg);
    EXPECT_TRUE(r.dense);
    EXPECT_GE(r.lambda_min_mass, 1.0 / (d + 2) - 1e-10);
    EXPECT_LE(r.lambda_max_mass, 1.0 + 1e-12);
    EXPECT_GE(r.lambda_min, r.lambda_min_mass - 1e-10);
    EXPECT_LE(r.lambda_max, r.upper_bound + 1e-8);
    EXPECT_NEAR(r.upper_bound, std::pow(r.c_inv, r.exponent) + 1.0, 1e-12 * r.upper_bound);
    EXPECT_TRUE(r.lower_ok && r.upper_ok);
  }
}

INSTANTIATE_TEST_SUITE_P(Dims, SpectralDims, ::testing::Values(1, 2, 3));

TEST(Spectral, LanczosPathOnLargerMesh) {
  auto s = testing_support::space(32, 2);
  const auto r = verify_spectral_equivalence(s, Regularization::energy_adapted());
  EXPECT_FALSE(r.dense);
  EXPECT_GE(r.lambda_min_mass, 0.25 - 1e-10);
  EXPECT_LE(r.lambda_max, r.upper_bound + 1e-8);
}

TEST(Monotonicity, TrackingErrorGrowsWithRho) {
  auto s = testing_support::space(8, 2);
  const auto t = fem::BoxTarget::centered(2);
  double prev = 0.0;
  for (double rho : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    const auto out = solve(build_primal_system(s, Regularization::energy_constant(rho), t), {}, tight(1e-13));
    const double e = fem::l2_error_box_target(*s, out.y, t);
    EXPECT_LE(prev, e + 1e-12) << rho;
    prev = e;
  }
}

TEST(Solve, PrimalDefaultToleranceAndWarmStart) {
  auto s = testing_support::space(8, 3);
  const auto sys = build_primal_system(s, Regularization::energy_adapted(), fem::BoxTarget::centered(3));
  la::KrylovOptions o;
  const auto cold = solve(sys, {}, o);
  EXPECT_TRUE(cold.report.converged);
  EXPECT_LE(cold.report.final_residual, 1e-6 * cold.report.initial_residual);
  const auto warm = solve(sys, cold.y, o);
  EXPECT_LE(warm.report.iterations, cold.report.iterations);
  EXPECT_THROW(solve(sys, std::vector<double>(3, 0.0), o), ParameterError);
}

TEST(SaddleHelpers, SplitJoinRoundTrip) {
  const std::vector<double> p{1, 2}, y{3, 4};
  const auto x = join_saddle(p, y);
  EXPECT_EQ(x, (std::vector<double>{1, 2, 3, 4}));
  const auto s = split_saddle(x);
  EXPECT_EQ(s.p, p);
  EXPECT_EQ(s.y, y);
}
