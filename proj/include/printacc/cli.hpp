#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace printacc {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int not_converged = 2; // ICP stopped at its iteration cap
inline constexpr int usage = 64;
inline constexpr int data = 65;
inline constexpr int internal = 70;
} // namespace exit_code

// Command line entry point. `args` excludes the program name. Tables go to
// `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace printacc
