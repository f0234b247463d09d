#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cbp::cli {

// Runs one command given as plain arguments (no program name). Human output
// goes to `out`, diagnostics to `err`. Returns the process exit code:
// 0 success, 1 rejected input or failed operation, 2 usage error, 3 fuel
// exhausted.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cbp::cli
