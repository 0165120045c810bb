#pragma once

#include "ocpfem/ocp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ocpfem::driver {

/// Level tolerance alpha * (n_l / n_{l-1})^{-beta/3} for nested iteration,
/// base_tol on the coarsest level.
struct ToleranceSchedule {
  double alpha = 0.5;
  double beta = 0.5;
  double base_tol = 1e-6;

  void validate() const;
  static ToleranceSchedule uniform_default() { return {0.5, 0.5, 1e-6}; }
  static ToleranceSchedule adaptive_default() { return {0.25, 0.75, 1e-6}; }
};

double tolerance_for_level(const ToleranceSchedule& s, std::size_t n_l, std::size_t n_prev);
/// Level 1 gets base_tol.
double tolerance_for_level(const ToleranceSchedule& s, int level, std::size_t n_l, std::size_t n_prev);

enum class RefineMode { Uniform, Adaptive };
std::string to_string(RefineMode m);

struct StudyConfig {
  int dim = 3;
  int cells = 16;  ///< initial cells per axis
  int levels = 3;
  RefineMode refine = RefineMode::Uniform;
  bool nested = false;
  ocp::Form form = ocp::Form::DiffusionPrimal;
  ocp::Regularization reg = ocp::Regularization::energy_adapted();
  ocp::SystemOptions system;
  ToleranceSchedule schedule = ToleranceSchedule::uniform_default();
  double theta = 0.5;
  std::size_t max_iters = 1000;
  fem::BoxTarget target = fem::BoxTarget::centered(3);
  /// Adaptive only: stop after the first level with error <= stop_error (0: off).
  double stop_error = 0.0;
  /// Adaptive only: do not refine beyond this many vertices (0: off).
  std::size_t max_dofs = 0;
  std::uint64_t seed = 7;
  /// 3D red refinement rule of the uniform hierarchy.
  mesh::OctahedronSplit split = mesh::OctahedronSplit::ShortestDiagonal;
  /// The box target is re-centered for dim when true.
  bool centered_target = true;

  void validate() const;
  fem::BoxTarget effective_target() const;
};

struct LevelRecord {
  int level = 0;
  std::size_t dofs = 0;  ///< all vertices, boundary included
  std::size_t free_dofs = 0;
  std::size_t elements = 0;
  double error = 0.0;
  std::optional<double> eoc;
  std::size_t iterations = 0;
  double tol = 0.0;
  double time_s = 0.0;  ///< Krylov solve only
  double assembly_s = 0.0;
  bool converged = true;
};

struct StudyReport {
  StudyConfig config;
  std::vector<LevelRecord> records;
  bool completed = true;
  std::string failure;
};

/// Uniform hierarchy: n^d Kuhn mesh refined uniformly levels-1 times.
StudyReport run_uniform_study(const StudyConfig& cfg);
/// Adaptive hierarchy: solve, indicators, Doerfler marking, bisection.
StudyReport run_adaptive_study(const StudyConfig& cfg);
StudyReport run_study(const StudyConfig& cfg);
/// One non-nested solve on the level-th mesh of the uniform hierarchy.
StudyReport run_single_solve(const StudyConfig& cfg, int level);
/// The level-th mesh of the uniform hierarchy (level 1: cells^d Kuhn mesh).
mesh::Mesh uniform_level_mesh(const StudyConfig& cfg, int level);

/// Uniform: log2(e_{l-1}/e_l). Adaptive: d log(e_{l-1}/e_l) / log(n_l/n_{l-1}).
/// Absent for the first record and whenever an error is zero.
void compute_eoc(std::vector<LevelRecord>& records, RefineMode mode, int dim);

struct ScalingRecord {
  int threads = 1;
  std::size_t iterations = 0;
  double time_s = 0.0;  ///< minimum over repetitions
  double speedup = 1.0; ///< relative to the first entry
  double error = 0.0;
  double final_residual = 0.0;
};

struct ScalingReport {
  int level = 0;
  std::size_t dofs = 0;
  bool strict = true;
  std::vector<ScalingRecord> records;
};

/// Repeats the non-nested level-l uniform solve at every thread count
/// (repetitions runs each, minimum time kept).
ScalingReport run_scaling_bench(const StudyConfig& cfg, int level, const std::vector<int>& thread_counts,
                                int repetitions = 3, bool strict = true);

} // namespace ocpfem::driver
