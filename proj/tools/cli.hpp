#pragma once

#include <ostream>

namespace parakkt::cli {

enum ExitCode { kCertified = 0, kCheckFailed = 1, kUsage = 2 };

/// Entry point of the parakkt tool. `out` receives result lines, `err`
/// progress and diagnostics.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace parakkt::cli
