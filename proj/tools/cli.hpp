#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dendro::cli {

/// Runs one command. Exit codes: 0 success, 1 domain or budget error
/// (including a failed check), 2 usage error. On a nonzero exit nothing is
/// written to `out` and `err` receives {"error", "detail"} as JSON.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dendro::cli
