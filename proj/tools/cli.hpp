#pragma once

#include <string>
#include <vector>

namespace aquagan::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericFailure = 3 };

// argv without the program name.
int run(const std::vector<std::string>& args);

}  // namespace aquagan::cli
