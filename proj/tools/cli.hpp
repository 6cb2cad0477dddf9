#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cascade::cli {

enum ExitCode : int {
    kOk = 0,
    kUsageError = 2,
    kDataError = 3,
    kResourceError = 4,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "CASCADE_OUT_DIR";

/// Runs one invocation; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cascade::cli
