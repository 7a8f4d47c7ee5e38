#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace warden {

// Exit codes: 0 success, 1 runtime error, 2 analysis rejection, 3 I/O error.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace warden
