#pragma once

#include <string>
#include <vector>

namespace wsol::cli {

/// Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numeric failure.
enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

/// Runs one `wsol` invocation; `args` excludes the program name.
int run(const std::vector<std::string>& args);

}  // namespace wsol::cli
