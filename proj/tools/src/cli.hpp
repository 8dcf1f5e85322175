#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace saf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitNotConverged = 4;

/// Parses `args` (without the program name) and runs one subcommand.
/// Human-readable output goes to `out`; failures are reported on `err` as a
/// single JSON object and mapped to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace saf::cli
