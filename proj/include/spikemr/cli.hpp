#pragma once

#include <iosfwd>
#include <string>
#include <vector>

// Command-line front end. Exit codes:
//   0  success
//   1  bad usage (unknown flag, invalid value or combination)
//   2  runtime failure (I/O, parse, integrity, divergence, job errors)
//   3  compare found a difference

namespace spikemr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitMismatch = 3;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace spikemr::cli
