#include "ocpfem/ocp.hpp"

#include "ocpfem/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace ocpfem::ocp {

void Regularization::validate() const {
  if (mode == RhoMode::Constant && !(value > 0.0 && std::isfinite(value))) {
    throw ParameterError("constant regularization parameter must be positive");
  }
}

Regularization Regularization::energy_adapted() { return {}; }

Regularization Regularization::energy_constant(double rho) {
  Regularization r;
  r.mode = RhoMode::Constant;
  r.value = rho;
  r.validate();
  return r;
}

Regularization Regularization::l2_adapted() {
  Regularization r;
  r.kind = RegKind::L2;
  return r;
}

Regularization Regularization::l2_constant(double rho) {
  Regularization r = l2_adapted();
  r.mode = RhoMode::Constant;
  r.value = rho;
  r.validate();
  return r;
}

std::string to_string(RegKind k) { return k == RegKind::Energy ? "energy" : "l2"; }

std::string to_string(Form f) {
  switch (f) {
  case Form::DiffusionPrimal: return "primal";
  case Form::SchurComplement: return "schur";
  default: return "saddle";
  }
}

std::vector<double> element_rho(const mesh::Mesh& m, const Regularization& reg) {
  reg.validate();
  if (reg.mode == RhoMode::Constant) return std::vector<double>(m.num_elements(), reg.value);
  auto h = mesh::element_sizes(m, reg.size_measure);
  const int r = reg.exponent();
  for (auto& v : h) v = std::pow(v, r);
  return h;
}

// ---------------------------------------------------------------------------

std::shared_ptr<const RegularizationBlock> RegularizationBlock::build(const fem::FeSpace& space,
                                                                      const Regularization& reg,
                                                                      const SystemOptions& opts) {
  auto rho = element_rho(space.mesh(), reg);
  std::vector<double> inv_rho(rho.size());
  for (std::size_t e = 0; e < rho.size(); ++e) inv_rho[e] = 1.0 / rho[e];

  std::shared_ptr<RegularizationBlock> b(new RegularizationBlock);
  b->inner_tol_ = opts.inner_tol;
  b->inner_max_iters_ = opts.inner_max_iters;
  if (reg.kind == RegKind::Energy) {
    auto k = std::make_shared<la::SparseMatrix>(fem::assemble_stiffness(space, inv_rho));
    b->diag_ = la::DiagonalMatrix(k->diagonal_entries());
    b->matrix_ = std::move(k);
  } else if (reg.lumped) {
    b->diag_ = fem::lump_mass(fem::assemble_weighted_mass(space, inv_rho));
  } else {
    auto m = std::make_shared<la::SparseMatrix>(fem::assemble_weighted_mass(space, inv_rho));
    b->diag_ = la::DiagonalMatrix(m->diagonal_entries());
    b->matrix_ = std::move(m);
  }
  return b;
}

void RegularizationBlock::apply(std::span<const double> x, std::span<double> y) const {
  if (matrix_) {
    matrix_->apply(x, y);
  } else {
    diag_.apply(x, y);
  }
}

void RegularizationBlock::apply_inverse(std::span<const double> x, std::span<double> y) const {
  if (!matrix_) {
    diag_.apply_inverse(x, y);
    return;
  }
  if (la::norm2(x) == 0.0) {
    la::fill(y, 0.0);
    return;
  }
  la::KrylovOptions o;
  o.rel_tol = inner_tol_;
  o.max_iters = inner_max_iters_;
  const la::Vector zero(x.size(), 0.0);
  auto res = la::pcg(la::make_operator(matrix_), diag_, x, zero, o);
  inner_iterations_ += res.report.iterations;
  if (!res.report.converged) {
    throw NumericalError("inner solve with the regularization block did not converge");
  }
  la::copy(res.x, y);
}

// ---------------------------------------------------------------------------

namespace {

la::DiagonalMatrix make_preconditioner(const la::SparseMatrix& mass, PreconditionerKind k) {
  return k == PreconditionerKind::LumpedMass ? fem::lump_mass(mass) : fem::mass_diagonal(mass);
}

DiscreteSystem common(Form form, std::shared_ptr<const fem::FeSpace> space, const Regularization& reg,
                      const fem::BoxTarget& target, const SystemOptions& opts) {
  if (!space) throw ParameterError("null finite element space");
  reg.validate();
  target.validate(space->mesh().dim());
  DiscreteSystem s;
  s.form = form;
  s.reg = reg;
  s.space = space;
  s.mass = std::make_shared<la::SparseMatrix>(fem::assemble_mass(*space));
  s.rhs = fem::assemble_load_box_target(*space, target);
  s.preconditioner = make_preconditioner(*s.mass, opts.preconditioner);
  return s;
}

} // namespace

DiscreteSystem build_primal_system(std::shared_ptr<const fem::FeSpace> space, const Regularization& reg,
                                   const fem::BoxTarget& target, const SystemOptions& opts) {
  if (reg.kind != RegKind::Energy) {
    throw ParameterError("the diffusion primal form requires energy regularization");
  }
  auto s = common(Form::DiffusionPrimal, space, reg, target, opts);
  const auto rho = element_rho(space->mesh(), reg);
  const double one = 1.0;
  s.primal_matrix = std::make_shared<la::SparseMatrix>(
      fem::assemble_diffusion_reaction(*space, rho, std::span<const double>(&one, 1)));
  s.op = la::make_operator(s.primal_matrix);
  return s;
}

DiscreteSystem build_schur_operator(std::shared_ptr<const fem::FeSpace> space, const Regularization& reg,
                                    const fem::BoxTarget& target, const SystemOptions& opts) {
  auto s = common(Form::SchurComplement, space, reg, target, opts);
  s.stiffness = std::make_shared<la::SparseMatrix>(fem::assemble_stiffness(*space));
  s.regularization = RegularizationBlock::build(*space, reg, opts);
  auto k = s.stiffness;
  auto m = s.mass;
  auto a = s.regularization;
  const std::size_t n = space->size();
  s.op.size = n;
  s.op.apply = [k, m, a, n](std::span<const double> x, std::span<double> y) {
    la::Vector t(n), w(n);
    k->apply(x, t);
    a->apply_inverse(t, w);
    k->apply(w, y);
    m->apply(x, t);
    la::axpy(1.0, t, y);
  };
  return s;
}

DiscreteSystem build_saddle_system(std::shared_ptr<const fem::FeSpace> space, const Regularization& reg,
                                   const fem::BoxTarget& target, const SystemOptions& opts) {
  auto s = common(Form::SaddlePoint, space, reg, target, opts);
  s.stiffness = std::make_shared<la::SparseMatrix>(fem::assemble_stiffness(*space));
  s.regularization = RegularizationBlock::build(*space, reg, opts);
  const std::size_t n = space->size();

  la::Vector rhs(2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) rhs[n + i] = -s.rhs[i];
  s.rhs = std::move(rhs);

  la::Vector pd(2 * n);
  const auto ad = s.regularization->diagonal().entries();
  const auto md = s.preconditioner.entries();
  std::copy(ad.begin(), ad.end(), pd.begin());
  std::copy(md.begin(), md.end(), pd.begin() + static_cast<std::ptrdiff_t>(n));
  s.preconditioner = la::DiagonalMatrix(std::move(pd));

  auto k = s.stiffness;
  auto m = s.mass;
  auto a = s.regularization;
  s.op.size = 2 * n;
  s.op.apply = [k, m, a, n](std::span<const double> x, std::span<double> y) {
    const auto p = x.subspan(0, n), yy = x.subspan(n, n);
    auto out_p = y.subspan(0, n), out_y = y.subspan(n, n);
    la::Vector t(n);
    // first row: A p + K y
    a->apply(p, out_p);
    k->apply(yy, t);
    la::axpy(1.0, t, out_p);
    // second row: K p - M y
    k->apply(p, out_y);
    m->apply(yy, t);
    la::axpy(-1.0, t, out_y);
  };
  return s;
}

DiscreteSystem build_system(Form form, std::shared_ptr<const fem::FeSpace> space, const Regularization& reg,
                            const fem::BoxTarget& target, const SystemOptions& opts) {
  switch (form) {
  case Form::DiffusionPrimal: return build_primal_system(std::move(space), reg, target, opts);
  case Form::SchurComplement: return build_schur_operator(std::move(space), reg, target, opts);
  default: return build_saddle_system(std::move(space), reg, target, opts);
  }
}

SaddleSolution split_saddle(std::span<const double> x) {
  if (x.size() % 2 != 0) throw ParameterError("saddle vector must have even length");
  const std::size_t n = x.size() / 2;
  SaddleSolution s;
  s.p.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
  s.y.assign(x.begin() + static_cast<std::ptrdiff_t>(n), x.end());
  return s;
}

Vector join_saddle(std::span<const double> p, std::span<const double> y) {
  if (p.size() != y.size()) throw ParameterError("adjoint and state blocks differ in size");
  Vector x(p.begin(), p.end());
  x.insert(x.end(), y.begin(), y.end());
  return x;
}

SolveOutcome solve(const DiscreteSystem& sys, std::span<const double> x0, const la::KrylovOptions& opts) {
  la::Vector zero;
  if (x0.empty()) {
    zero.assign(sys.size(), 0.0);
    x0 = zero;
  }
  if (x0.size() != sys.size()) throw ParameterError("initial guess has the wrong size");
  auto res = sys.form == Form::SaddlePoint ? la::minres(sys.op, sys.preconditioner, sys.rhs, x0, opts)
                                           : la::pcg(sys.op, sys.preconditioner, sys.rhs, x0, opts);
  SolveOutcome out;
  out.y = sys.form == Form::SaddlePoint ? split_saddle(res.x).y : res.x;
  out.solution = std::move(res.x);
  out.report = std::move(res.report);
  return out;
}

Vector recover_control(const RegularizationBlock& a, std::span<const double> p) {
  if (p.size() != a.size()) throw ParameterError("adjoint vector has the wrong size");
  Vector u(p.size());
  a.apply(p, u);
  la::scale(-1.0, u);
  return u;
}

double schur_identity_deviation(std::shared_ptr<const fem::FeSpace> space, double rho_schur, double rho_primal,
                                std::size_t n_vectors, std::uint64_t seed, const SystemOptions& opts) {
  if (!(rho_primal > 0.0)) throw ParameterError("regularization parameter must be positive");
  const auto target = fem::BoxTarget::centered(space->mesh().dim());
  auto schur = build_schur_operator(space, Regularization::energy_constant(rho_schur), target, opts);
  auto primal = build_primal_system(space, Regularization::energy_constant(rho_primal), target, opts);

  const std::size_t n = space->size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  double worst = 0.0;
  la::Vector v(n), a(n), b(n);
  for (std::size_t k = 0; k < n_vectors && n > 0; ++k) {
    for (auto& x : v) x = g(rng);
    la::scale(1.0 / la::norm2(v), v);
    schur.op.apply(v, a);
    primal.op.apply(v, b);
    const double ref = la::norm2(b);
    la::axpy(-1.0, b, a);
    if (ref > 0.0) worst = std::max(worst, la::norm2(a) / ref);
  }
  return worst;
}

// ---------------------------------------------------------------------------

namespace {

using DenseMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

DenseMat to_eigen(const la::SparseMatrix& a) {
  const std::size_t n = a.size();
  DenseMat d = DenseMat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const auto off = a.row_offsets();
  const auto col = a.col_indices();
  const auto val = a.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = off[i]; q < off[i + 1]; ++q) d(static_cast<Eigen::Index>(i), col[q]) = val[q];
  }
  return d;
}

std::vector<double> to_buffer(const DenseMat& m) {
  DenseMat sym = 0.5 * (m + m.transpose());
  return std::vector<double>(sym.data(), sym.data() + sym.size());
}

} // namespace

SpectralReport verify_spectral_equivalence(std::shared_ptr<const fem::FeSpace> space, const Regularization& reg,
                                           const la::EigOptions& eig, double slack_lower, double slack_upper) {
  if (!space) throw ParameterError("null finite element space");
  reg.validate();
  const auto& m = space->mesh();
  const int d = m.dim();
  const std::size_t n = space->size();
  if (n == 0) throw ParameterError("spectral check needs at least one free dof");

  SystemOptions so;
  so.preconditioner = PreconditionerKind::LumpedMass;
  auto sys = build_schur_operator(space, reg, fem::BoxTarget::centered(d), so);
  const la::DiagonalMatrix dh = sys.preconditioner;

  auto h = mesh::element_sizes(m, reg.size_measure);
  for (auto& v : h) v *= v;
  auto kh2 = std::make_shared<la::SparseMatrix>(fem::assemble_stiffness(*space, h));

  SpectralReport r;
  r.exponent = reg.exponent();
  r.lower_bound = 1.0 / (d + 2.0);

  // The consistent L2 block M_{1/rho} needs the inverse inequality in the
  // M-norm; the lumped and energy blocks are bounded through D_h.
  const bool consistent = reg.kind == RegKind::L2 && !reg.lumped;
  la::EigenBounds bm, bs, bk;
  if (n <= eig.dense_threshold) {
    r.dense = true;
    const DenseMat md = to_eigen(*sys.mass);
    const DenseMat kd = to_eigen(*sys.stiffness);
    DenseMat s;
    const auto& a = *sys.regularization;
    if (a.is_diagonal()) {
      Eigen::VectorXd inv(static_cast<Eigen::Index>(n));
      for (std::size_t i = 0; i < n; ++i) inv(static_cast<Eigen::Index>(i)) = 1.0 / a.diagonal()[i];
      s = kd * inv.asDiagonal() * kd + md;
    } else {
      const DenseMat ad = to_eigen(*a.matrix());
      Eigen::LLT<DenseMat> llt(ad);
      if (llt.info() != Eigen::Success) throw NumericalError("regularization block is not SPD");
      s = kd * llt.solve(kd) + md;
    }
    bm = la::extremal_generalized_eigs_dense(to_buffer(md), n, dh);
    bs = la::extremal_generalized_eigs_dense(to_buffer(s), n, dh);
    const DenseMat kh = to_eigen(*kh2);
    if (consistent) {
      Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(0.5 * (kh + kh.transpose()),
                                                                    0.5 * (md + md.transpose()),
                                                                    Eigen::EigenvaluesOnly);
      if (ges.info() != Eigen::Success) throw NumericalError("generalized eigensolve failed");
      bk.lambda_max = ges.eigenvalues().maxCoeff();
    } else {
      bk = la::extremal_generalized_eigs_dense(to_buffer(kh), n, dh);
    }
  } else {
    r.dense = false;
    bm = la::extremal_generalized_eigs(la::make_operator(sys.mass), dh, eig);
    bs = la::extremal_generalized_eigs(sys.op, dh, eig);
    bk = la::extremal_generalized_eigs(la::make_operator(kh2), dh, eig);
    // lambda_max(M^{-1}K) <= lambda_max(D^{-1}K) / lambda_min(D^{-1}M)
    if (consistent) bk.lambda_max /= bm.lambda_min;
  }
  r.lambda_min_mass = bm.lambda_min;
  r.lambda_max_mass = bm.lambda_max;
  r.lambda_min = bs.lambda_min;
  r.lambda_max = bs.lambda_max;
  r.c_inv = std::sqrt(std::max(bk.lambda_max, 0.0));
  r.upper_bound = std::pow(r.c_inv, r.exponent) + 1.0;
  r.lower_ok = r.lambda_min_mass >= r.lower_bound - slack_lower && r.lambda_min >= r.lower_bound - slack_lower;
  r.upper_ok = r.lambda_max <= r.upper_bound + slack_upper;
  return r;
}

} // namespace ocpfem::ocp
