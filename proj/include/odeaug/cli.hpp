#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace odeaug::cli {

/// Runs one subcommand. Returns 0 on success, 2 on usage error, 1 on
/// runtime error.
int execute(const std::vector<std::string>& args);
int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace odeaug::cli
