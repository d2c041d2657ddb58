#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace triage::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation or runtime failure
inline constexpr int kExitUsage = 2;

// args excludes the program name. Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Entry point for the executable; serve blocks SIGINT/SIGTERM itself.
int run_main(int argc, char** argv);

}  // namespace triage::cli
