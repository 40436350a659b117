#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace activeseg {

/// Exit codes: 0 success (or help), 1 usage error, 2 data error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace activeseg
