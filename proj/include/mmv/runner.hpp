#pragma once

#include <ostream>
#include <string>

namespace mmv {

struct RunOptions {
  std::string config_path;
  std::string out_override;  // replaces output.dir when nonempty
  int workers = 1;
  bool validate_only = false;  // schema checks and echo, no execution
};

// Drives one experiment end to end: parse, resolve, execute, write CSV
// artifacts plus a re-runnable manifest, print a machine-readable summary
// line.  Returns the process exit code: 0 success, 2 validation error,
// 3 numerical failure (infeasible / unreachable / too rare to estimate).
int run_experiment(const RunOptions& opts, std::ostream& out,
                   std::ostream& err);

}  // namespace mmv
