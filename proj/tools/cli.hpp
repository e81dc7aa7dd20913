#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gfl::cli {

enum ExitCode : int { kOk = 0, kBoundViolation = 1, kConfigError = 2 };

/// Runs the `gfl` command line. args excludes the program name; env_seed is
/// the value of GFL_SEED, if set, and overrides --seed.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::optional<std::string>& env_seed = std::nullopt);

}  // namespace gfl::cli
