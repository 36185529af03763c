#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace edm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

// Runs one subcommand (train | search | eval | predict | dataset-stats). args
// excludes the program name. Results go to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace edm::cli
