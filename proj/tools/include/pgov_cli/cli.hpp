#pragma once

#include <string>
#include <vector>

namespace pgov::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFormat = 3;

// argv[0] is the program name. Diagnostics go to stderr.
int run_subcommand(const std::vector<std::string>& argv);
int run_subcommand(int argc, char** argv);

}  // namespace pgov::cli
