#pragma once

#include <string>
#include <vector>

namespace rage::cli {

// Parses arguments, runs one subcommand and returns the exit status. Errors
// are reported as a single JSON line on stderr.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Gradient checks and module oracles, in a fixed order.
std::vector<Check> selftest();

}  // namespace rage::cli
