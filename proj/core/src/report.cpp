#include "ocpfem/report.hpp"

#include "json.hpp"

#include <cstdio>
#include <ostream>
#include <sstream>

namespace ocpfem::driver {

namespace {

using nlohmann::ordered_json;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ordered_json config_object(const StudyConfig& c) {
  ordered_json j;
  j["dim"] = c.dim;
  j["cells"] = c.cells;
  j["levels"] = c.levels;
  j["refine"] = to_string(c.refine);
  j["nested"] = c.nested;
  j["form"] = ocp::to_string(c.form);
  j["reg"] = ocp::to_string(c.reg.kind);
  if (c.reg.mode == ocp::RhoMode::Constant) {
    j["rho"] = "constant:" + fmt("%.17g", c.reg.value);
  } else {
    j["rho"] = "adapted";
  }
  j["rho_exponent"] = c.reg.exponent();
  j["h_measure"] = c.reg.size_measure == mesh::SizeMeasure::Diameter ? "diameter" : "volume";
  j["l2_lumped"] = c.reg.lumped;
  j["precond"] = c.system.preconditioner == ocp::PreconditionerKind::LumpedMass ? "lumped" : "diag";
  j["alpha"] = c.schedule.alpha;
  j["beta"] = c.schedule.beta;
  j["tol"] = c.schedule.base_tol;
  j["theta"] = c.theta;
  j["max_iters"] = c.max_iters;
  j["seed"] = c.seed;
  const auto t = c.effective_target();
  j["target"] = {{"lower", {t.lower[0], t.lower[1], t.lower[2]}},
                 {"upper", {t.upper[0], t.upper[1], t.upper[2]}},
                 {"inside", t.inside_value},
                 {"outside", t.outside_value}};
  j["eoc_convention"] = c.refine == RefineMode::Uniform ? "log2(e_prev/e)" : "d*log(e_prev/e)/log(n/n_prev)";
  return j;
}

} // namespace

void write_csv(std::ostream& os, const StudyReport& r, bool no_time) {
  os << "level,dofs,error,eoc,its,tol,time_s\n";
  for (const auto& x : r.records) {
    os << x.level << ',' << x.dofs << ',' << fmt("%.6e", x.error) << ',';
    if (x.eoc) os << fmt("%.4f", *x.eoc);
    os << ',' << x.iterations << ',' << fmt("%.6e", x.tol) << ',' << fmt("%.6f", no_time ? 0.0 : x.time_s) << '\n';
  }
}

std::string to_csv(const StudyReport& r, bool no_time) {
  std::ostringstream os;
  write_csv(os, r, no_time);
  return os.str();
}

std::string config_json(const StudyConfig& c) { return config_object(c).dump(2); }

void write_json(std::ostream& os, const StudyReport& r, bool no_time) {
  ordered_json j;
  j["config"] = config_object(r.config);
  ordered_json recs = ordered_json::array();
  for (const auto& x : r.records) {
    ordered_json e;
    e["level"] = x.level;
    e["dofs"] = x.dofs;
    e["free_dofs"] = x.free_dofs;
    e["elements"] = x.elements;
    e["error"] = x.error;
    e["eoc"] = x.eoc ? ordered_json(*x.eoc) : ordered_json(nullptr);
    e["its"] = x.iterations;
    e["tol"] = x.tol;
    e["time_s"] = no_time ? 0.0 : x.time_s;
    e["assembly_s"] = no_time ? 0.0 : x.assembly_s;
    e["converged"] = x.converged;
    recs.push_back(e);
  }
  j["records"] = recs;
  j["completed"] = r.completed;
  if (!r.failure.empty()) j["failure"] = r.failure;
  os << j.dump(2) << '\n';
}

void write_scaling_csv(std::ostream& os, const ScalingReport& r, bool no_time) {
  os << "threads,its,time_s,speedup,error\n";
  for (const auto& x : r.records) {
    os << x.threads << ',' << x.iterations << ',' << fmt("%.6f", no_time ? 0.0 : x.time_s) << ','
       << fmt("%.3f", no_time ? 1.0 : x.speedup) << ',' << fmt("%.6e", x.error) << '\n';
  }
}

void write_scaling_json(std::ostream& os, const ScalingReport& r, const StudyConfig& c, bool no_time) {
  ordered_json j;
  j["config"] = config_object(c);
  j["level"] = r.level;
  j["dofs"] = r.dofs;
  j["strict_deterministic"] = r.strict;
  ordered_json recs = ordered_json::array();
  for (const auto& x : r.records) {
    recs.push_back({{"threads", x.threads},
                    {"its", x.iterations},
                    {"time_s", no_time ? 0.0 : x.time_s},
                    {"speedup", no_time ? 1.0 : x.speedup},
                    {"error", x.error}});
  }
  j["records"] = recs;
  os << j.dump(2) << '\n';
}

} // namespace ocpfem::driver
