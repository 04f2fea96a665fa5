#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace linselfcal {

// Runs the command line and returns the process exit code: 0 ok, 2 parse error,
// 3 precondition, 4 numerical failure, 5 I/O.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace linselfcal
