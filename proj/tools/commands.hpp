#pragma once

#include <string>
#include <vector>

namespace spectrec::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { ok = 0, usage = 2, data = 3, numerical = 4, internal = 1 };

// Runs one command line (args excludes the program name) and returns its exit code.
int run(const std::vector<std::string>& args);

}  // namespace spectrec::cli
