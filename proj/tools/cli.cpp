#include "cli.hpp"

#include "ocpfem/driver.hpp"
#include "ocpfem/error.hpp"
#include "ocpfem/parallel.hpp"
#include "ocpfem/report.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

namespace ocpfem::cli {

namespace {

struct Flags {
  int dim = 3;
  int cells = 16;
  int levels = 3;
  int level = 1;
  std::string refine = "uniform";
  std::string form = "primal";
  std::string reg = "energy";
  std::string rho = "adapted";
  std::string h_measure = "volume";
  bool l2_consistent = false;
  bool nested = false;
  std::optional<double> alpha;
  std::optional<double> beta;
  double theta = 0.5;
  double tol = 1e-6;
  std::size_t max_iters = 1000;
  int threads = 0;
  std::uint64_t seed = 7;
  std::string output;
  std::string format = "csv";
  bool no_time = false;
  std::string precond = "diag";
  bool strict = false;
  double stop_error = 0.0;
  std::size_t max_dofs = 0;
  // verify
  std::string check = "schur-identity";
  std::size_t vectors = 20;
  // bench
  std::vector<int> thread_list{1, 2, 4, 8};
  int repetitions = 3;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--dim", f.dim, "Spatial dimension (1, 2 or 3)")->capture_default_str();
  app->add_option("-n,--cells", f.cells, "Initial cells per axis")->capture_default_str();
  app->add_option("--refine", f.refine, "Refinement: uniform or adaptive")
      ->check(CLI::IsMember({"uniform", "adaptive"}))
      ->capture_default_str();
  app->add_option("--form", f.form, "Discrete form: primal, schur or saddle")
      ->check(CLI::IsMember({"primal", "schur", "saddle"}))
      ->capture_default_str();
  app->add_option("--reg", f.reg, "Regularization: energy or l2")
      ->check(CLI::IsMember({"energy", "l2"}))
      ->capture_default_str();
  app->add_option("--rho", f.rho, "Regularization parameter: adapted or constant:<value>")->capture_default_str();
  app->add_option("--h-measure", f.h_measure, "Local mesh size for adapted rho: volume or diameter")
      ->check(CLI::IsMember({"volume", "diameter"}))
      ->capture_default_str();
  app->add_flag("--l2-consistent", f.l2_consistent, "L2 regularization with the consistent weighted mass (inner PCG)");
  app->add_flag("--nested", f.nested, "Nested iteration (prolongated initial guess, level tolerances)");
  app->add_option("--alpha", f.alpha, "Nested tolerance factor (default 0.5 uniform, 0.25 adaptive)");
  app->add_option("--beta", f.beta, "Nested tolerance rate (default 0.5 uniform, 0.75 adaptive)");
  app->add_option("--theta", f.theta, "Doerfler marking fraction")->capture_default_str();
  app->add_option("--tol", f.tol, "Relative preconditioned residual tolerance (coarsest level)")
      ->capture_default_str();
  app->add_option("--max-iters", f.max_iters, "Krylov iteration limit")->capture_default_str();
  app->add_option("--threads", f.threads, "Worker threads (0: runtime default)")->capture_default_str();
  app->add_option("--seed", f.seed, "Seed for random test vectors")->capture_default_str();
  app->add_option("-o,--output", f.output, "Output file (default: stdout)");
  app->add_option("--format", f.format, "Output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app->add_flag("--no-time", f.no_time, "Write zero in all time columns");
  app->add_option("--precond", f.precond, "Preconditioner: diag (diag(M)) or lumped (lump(M))")
      ->check(CLI::IsMember({"diag", "lumped"}))
      ->capture_default_str();
  app->add_flag("--strict-deterministic", f.strict, "Thread-count independent reductions");
}

ocp::Regularization parse_regularization(const Flags& f) {
  ocp::Regularization r;
  r.kind = f.reg == "energy" ? ocp::RegKind::Energy : ocp::RegKind::L2;
  r.size_measure = f.h_measure == "diameter" ? mesh::SizeMeasure::Diameter : mesh::SizeMeasure::VolumeBased;
  r.lumped = !f.l2_consistent;
  if (f.rho == "adapted") {
    r.mode = ocp::RhoMode::MeshAdapted;
  } else if (f.rho.rfind("constant:", 0) == 0) {
    r.mode = ocp::RhoMode::Constant;
    const std::string v = f.rho.substr(9);
    std::size_t used = 0;
    try {
      r.value = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw ParameterError("--rho constant:<value> needs a number, got '" + v + "'");
  } else {
    throw ParameterError("--rho must be 'adapted' or 'constant:<value>'");
  }
  r.validate();
  return r;
}

driver::StudyConfig make_config(const Flags& f) {
  driver::StudyConfig c;
  c.dim = f.dim;
  c.cells = f.cells;
  c.levels = f.levels;
  c.refine = f.refine == "adaptive" ? driver::RefineMode::Adaptive : driver::RefineMode::Uniform;
  c.nested = f.nested;
  c.form = f.form == "primal" ? ocp::Form::DiffusionPrimal
                              : (f.form == "schur" ? ocp::Form::SchurComplement : ocp::Form::SaddlePoint);
  c.reg = parse_regularization(f);
  c.system.preconditioner =
      f.precond == "lumped" ? ocp::PreconditionerKind::LumpedMass : ocp::PreconditionerKind::MassDiagonal;
  c.schedule = c.refine == driver::RefineMode::Adaptive ? driver::ToleranceSchedule::adaptive_default()
                                                        : driver::ToleranceSchedule::uniform_default();
  if (f.alpha) c.schedule.alpha = *f.alpha;
  if (f.beta) c.schedule.beta = *f.beta;
  c.schedule.base_tol = f.tol;
  c.theta = f.theta;
  c.max_iters = f.max_iters;
  c.seed = f.seed;
  c.stop_error = f.stop_error;
  c.max_dofs = f.max_dofs;
  if (f.threads < 0) throw ParameterError("--threads must be nonnegative");
  c.validate();
  return c;
}

// Restores the global kernel settings touched by a CLI run.
struct KernelSettings {
  int threads;
  bool strict;
  KernelSettings() : threads(par::num_threads()), strict(par::strict_deterministic()) {}
  ~KernelSettings() {
    par::set_num_threads(threads);
    par::set_strict_deterministic(strict);
  }
};

class Sink {
public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ParameterError("cannot open output file '" + path + "'");
      os_ = file_.get();
    }
  }
  std::ostream& get() { return *os_; }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

int run_study_cmd(const Flags& f, std::ostream& out, std::ostream& err) {
  const auto cfg = make_config(f);
  const auto rep = driver::run_study(cfg);
  Sink sink(f.output, out);
  if (f.format == "json") {
    driver::write_json(sink.get(), rep, f.no_time);
  } else {
    driver::write_csv(sink.get(), rep, f.no_time);
  }
  if (!rep.completed) {
    err << "solver failure: " << rep.failure << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int run_solve_cmd(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.level < 1) throw ParameterError("--level must be at least 1");
  const auto cfg = make_config(f);
  const auto rep = driver::run_single_solve(cfg, f.level);
  Sink sink(f.output, out);
  if (f.format == "json") {
    driver::write_json(sink.get(), rep, f.no_time);
  } else {
    driver::write_csv(sink.get(), rep, f.no_time);
  }
  if (!rep.completed) {
    err << "solver failure: " << rep.failure << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

int run_verify_cmd(Flags f, std::ostream& out) {
  f.form = "schur";  // the checks build their own operators
  auto cfg = make_config(f);
  auto space = std::make_shared<const fem::FeSpace>(
      std::make_shared<const mesh::Mesh>(driver::uniform_level_mesh(cfg, cfg.levels)));
  Sink sink(f.output, out);
  nlohmann::ordered_json j;
  j["config"] = nlohmann::ordered_json::parse(driver::config_json(cfg));
  j["check"] = f.check;
  j["free_dofs"] = space->size();
  bool pass = false;
  if (f.check == "schur-identity") {
    if (cfg.reg.kind != ocp::RegKind::Energy) throw ParameterError("schur-identity needs --reg energy");
    double rho = cfg.reg.value;
    if (cfg.reg.mode == ocp::RhoMode::MeshAdapted) {
      const double h = 1.0 / (cfg.cells * std::pow(2.0, cfg.levels - 1));
      rho = h * h;
    }
    const double dev = ocp::schur_identity_deviation(space, rho, rho, f.vectors, f.seed, cfg.system);
    const double threshold = 1e-9;
    pass = dev <= threshold;
    if (f.format == "json") {
      j["rho"] = rho;
      j["vectors"] = f.vectors;
      j["max_rel_deviation"] = dev;
      j["threshold"] = threshold;
      j["pass"] = pass;
    } else {
      sink.get() << "check,rho,vectors,max_rel_deviation,threshold,pass\n"
                 << "schur-identity," << num(rho) << ',' << f.vectors << ',' << num(dev) << ',' << num(threshold)
                 << ',' << (pass ? 1 : 0) << '\n';
    }
  } else {
    la::EigOptions eo;
    eo.seed = f.seed;
    const auto r = ocp::verify_spectral_equivalence(space, cfg.reg, eo);
    pass = r.lower_ok && r.upper_ok;
    if (f.format == "json") {
      j["dense"] = r.dense;
      j["lambda_min_mass"] = r.lambda_min_mass;
      j["lambda_max_mass"] = r.lambda_max_mass;
      j["lambda_min"] = r.lambda_min;
      j["lambda_max"] = r.lambda_max;
      j["lower_bound"] = r.lower_bound;
      j["c_inv"] = r.c_inv;
      j["exponent"] = r.exponent;
      j["upper_bound"] = r.upper_bound;
      j["pass"] = pass;
    } else {
      sink.get() << "check,free_dofs,dense,lambda_min_mass,lambda_max_mass,lambda_min,lambda_max,lower_bound,"
                    "c_inv,upper_bound,pass\n"
                 << "spectral," << space->size() << ',' << (r.dense ? 1 : 0) << ',' << num(r.lambda_min_mass)
                 << ',' << num(r.lambda_max_mass) << ',' << num(r.lambda_min) << ',' << num(r.lambda_max) << ','
                 << num(r.lower_bound) << ',' << num(r.c_inv) << ',' << num(r.upper_bound) << ','
                 << (pass ? 1 : 0) << '\n';
    }
  }
  if (f.format == "json") sink.get() << j.dump(2) << '\n';
  return pass ? kExitOk : kExitFailure;
}

int run_bench_cmd(const Flags& f, std::ostream& out) {
  const auto cfg = make_config(f);
  const auto rep = driver::run_scaling_bench(cfg, f.level, f.thread_list, f.repetitions, f.strict);
  Sink sink(f.output, out);
  if (f.format == "json") {
    driver::write_scaling_json(sink.get(), rep, cfg, f.no_time);
  } else {
    driver::write_scaling_csv(sink.get(), rep, f.no_time);
  }
  return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Finite element solvers for tracking-type optimal control problems"};
  app.name(args.empty() ? "ocpfem" : args.front());
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "Solve one level of the uniform hierarchy");
  add_common(solve, f);
  solve->add_option("--level", f.level, "Uniform level to solve (1: initial mesh)")->capture_default_str();

  auto* study = app.add_subcommand("study", "Multilevel convergence study");
  add_common(study, f);
  study->add_option("--levels", f.levels, "Number of levels")->capture_default_str();
  study->add_option("--stop-error", f.stop_error, "Adaptive: stop once the error drops below this (0: off)")
      ->capture_default_str();
  study->add_option("--max-dofs", f.max_dofs, "Adaptive: vertex budget (0: off)")->capture_default_str();

  auto* verify = app.add_subcommand("verify", "Structural checks: Schur identity or spectral equivalence");
  add_common(verify, f);
  verify->add_option("--levels", f.levels, "Uniform level of the test mesh")->capture_default_str();
  verify->add_option("--check", f.check, "schur-identity or spectral")
      ->check(CLI::IsMember({"schur-identity", "spectral"}))
      ->capture_default_str();
  verify->add_option("--vectors", f.vectors, "Random vectors for the Schur identity")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Thread scaling of one uniform level");
  add_common(bench, f);
  bench->add_option("--level", f.level, "Uniform level to solve")->capture_default_str();
  bench->add_option("--thread-list", f.thread_list, "Thread counts")->delimiter(',')->capture_default_str();
  bench->add_option("--repetitions", f.repetitions, "Repetitions per thread count (minimum kept)")
      ->capture_default_str();

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) argv.push_back("ocpfem");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (e.get_exit_code() == 0) return kExitOk;
    (void)code;
    return kExitConfig;
  }

  CLI::App* active = solve->parsed() ? solve : study->parsed() ? study : verify->parsed() ? verify : bench;
  KernelSettings restore;
  try {
    if (f.threads > 0) par::set_num_threads(f.threads);
    par::set_strict_deterministic(f.strict);
    if (active == solve) return run_solve_cmd(f, out, err);
    if (active == study) return run_study_cmd(f, out, err);
    if (active == verify) return run_verify_cmd(f, out);
    return run_bench_cmd(f, out);
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

} // namespace ocpfem::cli
