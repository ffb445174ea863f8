#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace learnrec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

/// Runs one invocation. `args` excludes the program name. Output goes to
/// `out`, diagnostics and usage text to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace learnrec::cli
