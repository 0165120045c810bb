#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ocpfem::cli {

/// Exit codes: 0 success, 1 solver failure or failed check, 2 bad flags.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// Parses args (args[0] is the program name) and runs the subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace ocpfem::cli
