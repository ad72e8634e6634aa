#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace subhess::cli {

// Exit codes: 0 success, 1 identity violation, invariant failure or solver
// failure, 2 rejected input (usage, configuration, preconditions).
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitRejected = 2;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace subhess::cli
