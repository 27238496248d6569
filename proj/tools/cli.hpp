#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lmf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitTrainingFailure = 3;

/// Runs `lmf <args...>` (args excludes the program name) and returns the exit
/// status. Diagnostics go to `err`, help text to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lmf::cli
