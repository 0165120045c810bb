#include "ocpfem/driver.hpp"

#include "ocpfem/error.hpp"
#include "ocpfem/parallel.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace ocpfem::driver {

void ToleranceSchedule::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in (0, 1]");
  if (!(beta > 0.0)) throw ParameterError("beta must be positive");
  if (!(base_tol > 0.0 && base_tol < 1.0)) throw ParameterError("base tolerance must lie in (0, 1)");
}

double tolerance_for_level(const ToleranceSchedule& s, std::size_t n_l, std::size_t n_prev) {
  s.validate();
  if (n_prev < 1 || n_l < n_prev) throw ParameterError("level sizes must satisfy n_l >= n_prev >= 1");
  const double ratio = static_cast<double>(n_l) / static_cast<double>(n_prev);
  return s.alpha * std::pow(ratio, -s.beta / 3.0);
}

double tolerance_for_level(const ToleranceSchedule& s, int level, std::size_t n_l, std::size_t n_prev) {
  if (level <= 1) {
    s.validate();
    return s.base_tol;
  }
  return tolerance_for_level(s, n_l, n_prev);
}

std::string to_string(RefineMode m) { return m == RefineMode::Uniform ? "uniform" : "adaptive"; }

void StudyConfig::validate() const {
  if (dim < 1 || dim > 3) throw ParameterError("dim must be 1, 2 or 3");
  if (cells < 1) throw ParameterError("cells per axis must be at least 1");
  if (levels < 1) throw ParameterError("levels must be at least 1");
  if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("theta must lie in (0, 1]");
  if (max_iters < 1) throw ParameterError("max_iters must be at least 1");
  if (form == ocp::Form::DiffusionPrimal && reg.kind != ocp::RegKind::Energy) {
    throw ParameterError("the primal form requires energy regularization");
  }
  if (stop_error < 0.0) throw ParameterError("stop_error must be nonnegative");
  reg.validate();
  schedule.validate();
  effective_target().validate(dim);
}

fem::BoxTarget StudyConfig::effective_target() const {
  if (!centered_target) return target;
  auto t = fem::BoxTarget::centered(dim);
  t.inside_value = target.inside_value;
  t.outside_value = target.outside_value;
  return t;
}

void compute_eoc(std::vector<LevelRecord>& records, RefineMode mode, int dim) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    r.eoc.reset();
    if (i == 0) continue;
    const auto& p = records[i - 1];
    if (!(r.error > 0.0) || !(p.error > 0.0)) continue;
    const double lr = std::log(p.error / r.error);
    if (mode == RefineMode::Uniform) {
      r.eoc = lr / std::log(2.0);
    } else {
      if (r.dofs <= p.dofs) continue;
      r.eoc = dim * lr / std::log(static_cast<double>(r.dofs) / static_cast<double>(p.dofs));
    }
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct LevelState {
  std::shared_ptr<const fem::FeSpace> space;
  la::Vector solution;  // Krylov iterate, (p, y) for the saddle form
  la::Vector y;
};

// Nested initial guess on the fine space from the previous level.
la::Vector prolongate_guess(const StudyConfig& cfg, const LevelState& prev, const fem::FeSpace& fine,
                            const mesh::Prolongation& p) {
  const auto& cd = prev.space->dofmap();
  const auto& fd = fine.dofmap();
  if (cfg.form != ocp::Form::SaddlePoint) return fem::prolongate(p, cd, fd, prev.solution);
  const auto s = ocp::split_saddle(prev.solution);
  return ocp::join_saddle(fem::prolongate(p, cd, fd, s.p), fem::prolongate(p, cd, fd, s.y));
}

// Assembles and solves one level; false on solver failure.
bool solve_level(const StudyConfig& cfg, int level, LevelState& st, std::span<const double> x0, double tol,
                 StudyReport& report) {
  LevelRecord rec;
  rec.level = level;
  rec.dofs = st.space->mesh().num_vertices();
  rec.free_dofs = st.space->size();
  rec.elements = st.space->mesh().num_elements();
  rec.tol = tol;
  try {
    const auto t0 = Clock::now();
    const auto sys = ocp::build_system(cfg.form, st.space, cfg.reg, cfg.effective_target(), cfg.system);
    rec.assembly_s = seconds_since(t0);
    la::KrylovOptions ko;
    ko.rel_tol = tol;
    ko.max_iters = cfg.max_iters;
    auto out = ocp::solve(sys, x0, ko);
    rec.iterations = out.report.iterations;
    rec.time_s = out.report.wall_time;
    rec.converged = out.report.converged;
    rec.error = fem::l2_error_box_target(*st.space, out.y, cfg.effective_target());
    st.solution = std::move(out.solution);
    st.y = std::move(out.y);
  } catch (const NumericalError& e) {
    rec.converged = false;
    report.records.push_back(rec);
    report.completed = false;
    report.failure = "level " + std::to_string(level) + ": " + e.what();
    return false;
  }
  report.records.push_back(rec);
  if (!rec.converged) {
    report.completed = false;
    report.failure = "level " + std::to_string(level) + ": Krylov solver reached max_iters without converging";
    return false;
  }
  return true;
}

double level_tolerance(const StudyConfig& cfg, int level, std::size_t n_l, std::size_t n_prev) {
  if (!cfg.nested || level == 1) return cfg.schedule.base_tol;
  return tolerance_for_level(cfg.schedule, level, n_l, n_prev);
}

} // namespace

StudyReport run_uniform_study(const StudyConfig& cfg) {
  cfg.validate();
  StudyReport report;
  report.config = cfg;
  report.config.refine = RefineMode::Uniform;

  auto m = std::make_shared<const mesh::Mesh>(mesh::build_unit_cube_mesh(cfg.cells, cfg.dim));
  LevelState st;
  st.space = std::make_shared<const fem::FeSpace>(m);
  if (!solve_level(cfg, 1, st, {}, level_tolerance(cfg, 1, 0, 0), report)) {
    compute_eoc(report.records, RefineMode::Uniform, cfg.dim);
    return report;
  }
  for (int level = 2; level <= cfg.levels; ++level) {
    auto ref = mesh::refine_uniform(st.space->mesh(), cfg.split);
    const std::size_t n_prev = st.space->mesh().num_vertices();
    LevelState next;
    next.space = std::make_shared<const fem::FeSpace>(std::make_shared<const mesh::Mesh>(std::move(ref.mesh)));
    la::Vector x0;
    if (cfg.nested) x0 = prolongate_guess(cfg, st, *next.space, ref.prolongation);
    const double tol = level_tolerance(cfg, level, next.space->mesh().num_vertices(), n_prev);
    st = LevelState{};  // release the coarse level before the fine solve
    if (!solve_level(cfg, level, next, x0, tol, report)) break;
    st = std::move(next);
  }
  compute_eoc(report.records, RefineMode::Uniform, cfg.dim);
  return report;
}

StudyReport run_adaptive_study(const StudyConfig& cfg) {
  cfg.validate();
  StudyReport report;
  report.config = cfg;
  report.config.refine = RefineMode::Adaptive;

  auto m = std::make_shared<const mesh::Mesh>(mesh::build_unit_cube_mesh(cfg.cells, cfg.dim));
  LevelState st;
  st.space = std::make_shared<const fem::FeSpace>(m);
  if (!solve_level(cfg, 1, st, {}, level_tolerance(cfg, 1, 0, 0), report)) {
    compute_eoc(report.records, RefineMode::Adaptive, cfg.dim);
    return report;
  }
  for (int level = 2; level <= cfg.levels; ++level) {
    if (cfg.stop_error > 0.0 && report.records.back().error <= cfg.stop_error) break;
    const auto eta = fem::element_error_indicators(*st.space, st.y, cfg.effective_target());
    const auto marked = mesh::mark_doerfler(eta, cfg.theta);
    if (marked.empty()) break;
    auto ref = mesh::refine_adaptive(st.space->mesh(), marked);
    if (cfg.max_dofs > 0 && ref.mesh.num_vertices() > cfg.max_dofs) break;
    const std::size_t n_prev = st.space->mesh().num_vertices();
    LevelState next;
    next.space = std::make_shared<const fem::FeSpace>(std::make_shared<const mesh::Mesh>(std::move(ref.mesh)));
    la::Vector x0;
    if (cfg.nested) x0 = prolongate_guess(cfg, st, *next.space, ref.prolongation);
    const double tol = level_tolerance(cfg, level, next.space->mesh().num_vertices(), n_prev);
    st = LevelState{};
    if (!solve_level(cfg, level, next, x0, tol, report)) break;
    st = std::move(next);
  }
  compute_eoc(report.records, RefineMode::Adaptive, cfg.dim);
  return report;
}

StudyReport run_study(const StudyConfig& cfg) {
  return cfg.refine == RefineMode::Uniform ? run_uniform_study(cfg) : run_adaptive_study(cfg);
}

mesh::Mesh uniform_level_mesh(const StudyConfig& cfg, int level) {
  if (level < 1) throw ParameterError("level must be at least 1");
  mesh::Mesh m = mesh::build_unit_cube_mesh(cfg.cells, cfg.dim);
  for (int l = 2; l <= level; ++l) m = mesh::refine_uniform(m, cfg.split).mesh;
  return m;
}

StudyReport run_single_solve(const StudyConfig& cfg, int level) {
  cfg.validate();
  StudyReport report;
  report.config = cfg;
  report.config.refine = RefineMode::Uniform;
  report.config.nested = false;
  LevelState st;
  st.space = std::make_shared<const fem::FeSpace>(
      std::make_shared<const mesh::Mesh>(uniform_level_mesh(cfg, level)));
  solve_level(cfg, level, st, {}, cfg.schedule.base_tol, report);
  return report;
}

ScalingReport run_scaling_bench(const StudyConfig& cfg, int level, const std::vector<int>& thread_counts,
                                int repetitions, bool strict) {
  cfg.validate();
  if (level < 1) throw ParameterError("level must be at least 1");
  if (thread_counts.empty()) throw ParameterError("at least one thread count is required");
  if (repetitions < 1) throw ParameterError("repetitions must be at least 1");
  for (int t : thread_counts) {
    if (t < 1) throw ParameterError("thread counts must be positive");
  }

  const bool was_strict = par::strict_deterministic();
  par::set_strict_deterministic(strict);
  struct Restore {
    bool v;
    ~Restore() { par::set_strict_deterministic(v); }
  } restore{was_strict};

  auto space = std::make_shared<const fem::FeSpace>(
      std::make_shared<const mesh::Mesh>(uniform_level_mesh(cfg, level)));
  const auto sys = ocp::build_system(cfg.form, space, cfg.reg, cfg.effective_target(), cfg.system);

  ScalingReport rep;
  rep.level = level;
  rep.dofs = space->mesh().num_vertices();
  rep.strict = strict;
  la::KrylovOptions ko;
  ko.rel_tol = cfg.schedule.base_tol;
  ko.max_iters = cfg.max_iters;
  for (int t : thread_counts) {
    par::ThreadScope scope(t);
    ScalingRecord r;
    r.threads = t;
    r.time_s = std::numeric_limits<double>::infinity();
    for (int k = 0; k < repetitions; ++k) {
      auto out = ocp::solve(sys, {}, ko);
      r.time_s = std::min(r.time_s, out.report.wall_time);
      r.iterations = out.report.iterations;
      r.final_residual = out.report.final_residual;
      if (k == 0) r.error = fem::l2_error_box_target(*space, out.y, cfg.effective_target());
    }
    rep.records.push_back(r);
  }
  for (auto& r : rep.records) r.speedup = rep.records.front().time_s / r.time_s;
  return rep;
}

} // namespace ocpfem::driver
