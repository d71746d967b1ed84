#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace prophecy::cli {

enum Exit { ok = 0, violation = 1, usage = 2 };

// Runs one command line (without the program name). Returns the exit code:
// 0 when everything checked passes, 1 on a violation or program error, 2 on
// a usage or parse error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prophecy::cli
