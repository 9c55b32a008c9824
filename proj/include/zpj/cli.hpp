#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace zpj {

// Runs one `zpj` invocation (args exclude the program name). Returns 0 on
// success, 1 on a failed command and 2 on a usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zpj
