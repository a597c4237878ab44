#ifndef STBA_TOOLS_CLI_HPP_
#define STBA_TOOLS_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace stba::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInvalidProblem = 3;

/// Runs the command line `args` (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stba::cli

#endif  // STBA_TOOLS_CLI_HPP_
