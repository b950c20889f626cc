#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace leapctl {

/// Runs one command line. Normal output goes to `out` (or the --out file),
/// diagnostics to `err`. Returns the process exit code: 0 on success, 2 for
/// configuration errors, 1 for other failures.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace leapctl
