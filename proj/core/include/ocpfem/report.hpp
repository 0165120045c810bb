#pragma once

#include "ocpfem/driver.hpp"

#include <iosfwd>
#include <string>

namespace ocpfem::driver {

/// Header `level,dofs,error,eoc,its,tol,time_s`; eoc is left empty when
/// absent. With no_time the time column is written as zero.
void write_csv(std::ostream& os, const StudyReport& r, bool no_time = false);
std::string to_csv(const StudyReport& r, bool no_time = false);

/// {"config": {...}, "records": [...], "completed": ..., "failure": ...}
void write_json(std::ostream& os, const StudyReport& r, bool no_time = false);
std::string config_json(const StudyConfig& c);

/// Header `threads,its,time_s,speedup,error`.
void write_scaling_csv(std::ostream& os, const ScalingReport& r, bool no_time = false);
void write_scaling_json(std::ostream& os, const ScalingReport& r, const StudyConfig& c, bool no_time = false);

} // namespace ocpfem::driver
