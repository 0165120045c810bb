#pragma once

#include "ocpfem/eigs.hpp"
#include "ocpfem/fem.hpp"
#include "ocpfem/krylov.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace ocpfem::ocp {

using la::Vector;

/// Energy: control measured in H^{-1}, regularization block K_{1/rho}.
/// L2: control measured in L2, regularization block rho^{-1} D_h (lumped) or
/// M_{1/rho} (consistent).
enum class RegKind { Energy, L2 };
enum class RhoMode { Constant, MeshAdapted };

struct Regularization {
  RegKind kind = RegKind::Energy;
  RhoMode mode = RhoMode::MeshAdapted;
  /// Used when mode == Constant.
  double value = 0.0;
  /// h_tau used by MeshAdapted (rho_tau = h_tau^r) and by the inverse
  /// inequality estimate.
  mesh::SizeMeasure size_measure = mesh::SizeMeasure::VolumeBased;
  /// L2 only: lumped (diagonal) regularization block.
  bool lumped = true;

  /// r = 2 for Energy, 4 for L2.
  int exponent() const { return kind == RegKind::Energy ? 2 : 4; }
  void validate() const;

  static Regularization energy_adapted();
  static Regularization energy_constant(double rho);
  static Regularization l2_adapted();
  static Regularization l2_constant(double rho);
};

std::string to_string(RegKind k);

/// rho_tau for every element.
std::vector<double> element_rho(const mesh::Mesh& m, const Regularization& reg);

enum class Form { DiffusionPrimal, SchurComplement, SaddlePoint };
std::string to_string(Form f);

enum class PreconditionerKind { MassDiagonal, LumpedMass };

struct SystemOptions {
  PreconditionerKind preconditioner = PreconditionerKind::MassDiagonal;
  /// Relative tolerance of inner PCG solves with sparse regularization blocks.
  double inner_tol = 1e-10;
  std::size_t inner_max_iters = 20000;
};

/// The regularization block A_{1/rho,h} with application and inverse.
class RegularizationBlock {
public:
  static std::shared_ptr<const RegularizationBlock> build(const fem::FeSpace& space, const Regularization& reg,
                                                          const SystemOptions& opts);

  std::size_t size() const { return diag_.size(); }
  bool is_diagonal() const { return matrix_ == nullptr; }
  void apply(std::span<const double> x, std::span<double> y) const;
  /// Exact for diagonal blocks; inner PCG from zero otherwise. Throws
  /// NumericalError if the inner solve does not converge.
  void apply_inverse(std::span<const double> x, std::span<double> y) const;
  const la::DiagonalMatrix& diagonal() const { return diag_; }
  const la::SparseMatrix* matrix() const { return matrix_.get(); }
  std::uint64_t inner_iterations() const { return inner_iterations_.load(); }

private:
  std::shared_ptr<const la::SparseMatrix> matrix_;
  la::DiagonalMatrix diag_;
  double inner_tol_ = 1e-10;
  std::size_t inner_max_iters_ = 20000;
  mutable std::atomic<std::uint64_t> inner_iterations_{0};
};

struct DiscreteSystem {
  Form form = Form::DiffusionPrimal;
  Regularization reg;
  std::shared_ptr<const fem::FeSpace> space;
  la::LinearOperator op;
  Vector rhs;
  /// diag(M) or lump(M); for the saddle form the block diagonal
  /// [diag(A); diag(M)] stored as one vector.
  la::DiagonalMatrix preconditioner;

  std::shared_ptr<const la::SparseMatrix> mass;
  std::shared_ptr<const la::SparseMatrix> stiffness;
  /// Primal form: K_rho + M.
  std::shared_ptr<const la::SparseMatrix> primal_matrix;
  std::shared_ptr<const RegularizationBlock> regularization;

  std::size_t state_size() const { return space->size(); }
  std::size_t size() const { return op.size; }
};

/// (K_rho + M) y = (y_d, phi). Energy regularization only.
DiscreteSystem build_primal_system(std::shared_ptr<const fem::FeSpace> space, const Regularization& reg,
                                   const fem::BoxTarget& target, const SystemOptions& opts = {});
/// (B^T A^{-1} B + M) y = (y_d, phi) applied matrix-free, with B = K.
DiscreteSystem build_schur_operator(std::shared_ptr<const fem::FeSpace> space, const Regularization& reg,
                                    const fem::BoxTarget& target, const SystemOptions& opts = {});
/// [[A, B], [B^T, -M]] (p, y) = (0, -(y_d, phi)).
DiscreteSystem build_saddle_system(std::shared_ptr<const fem::FeSpace> space, const Regularization& reg,
                                   const fem::BoxTarget& target, const SystemOptions& opts = {});
DiscreteSystem build_system(Form form, std::shared_ptr<const fem::FeSpace> space, const Regularization& reg,
                            const fem::BoxTarget& target, const SystemOptions& opts = {});

struct SaddleSolution {
  Vector y;
  Vector p;
};
/// Splits a saddle solution vector (p first, then y).
SaddleSolution split_saddle(std::span<const double> x);
Vector join_saddle(std::span<const double> p, std::span<const double> y);

struct SolveOutcome {
  Vector solution;  ///< Krylov iterate (p, y) for the saddle form.
  Vector y;         ///< State coefficients on free dofs.
  la::KrylovReport report;
};

/// PCG for the SPD forms, MINRES for the saddle form.
SolveOutcome solve(const DiscreteSystem& sys, std::span<const double> x0, const la::KrylovOptions& opts);

/// u = -A_{1/rho,h} p.
Vector recover_control(const RegularizationBlock& a, std::span<const double> p);

/// Max relative deviation ||S v - (rho_primal K + M) v|| / ||(rho_primal K + M) v||
/// over n_vectors random unit vectors, where S is the energy Schur
/// complement with constant rho_schur.
double schur_identity_deviation(std::shared_ptr<const fem::FeSpace> space, double rho_schur, double rho_primal,
                                std::size_t n_vectors = 20, std::uint64_t seed = 7, const SystemOptions& opts = {});
inline double verify_schur_identity(std::shared_ptr<const fem::FeSpace> space, double rho, std::size_t n_vectors = 20,
                                    std::uint64_t seed = 7) {
  return schur_identity_deviation(std::move(space), rho, rho, n_vectors, seed);
}

struct SpectralReport {
  double lambda_min_mass = 0.0;  ///< lambda_min(D^{-1} M)
  double lambda_max_mass = 0.0;  ///< lambda_max(D^{-1} M)
  double lambda_min = 0.0;       ///< lambda_min(D^{-1} S)
  double lambda_max = 0.0;       ///< lambda_max(D^{-1} S)
  double lower_bound = 0.0;      ///< 1/(d+2)
  double c_inv = 0.0;            ///< inverse inequality constant estimate
  double upper_bound = 0.0;      ///< c_inv^r + 1
  int exponent = 2;
  bool dense = true;
  bool lower_ok = false;
  bool upper_ok = false;
};

/// Extremal eigenvalues of (S_h, D_h) and (M_h, D_h) with D_h = lump(M_h),
/// and the inverse-inequality constant c_inv^2 = lambda_max(D_h^{-1} K_{h^2}),
/// where K_{h^2} is the stiffness matrix weighted by h_tau^2. For the
/// consistent L2 block the constant is taken in the M-norm,
/// lambda_max(M_h^{-1} K_{h^2}).
SpectralReport verify_spectral_equivalence(std::shared_ptr<const fem::FeSpace> space, const Regularization& reg,
                                           const la::EigOptions& eig = {}, double slack_lower = 1e-10,
                                           double slack_upper = 1e-8);

} // namespace ocpfem::ocp
