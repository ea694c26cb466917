#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace growfn::cli {

/// Runs the command line with args (program name excluded) and returns the exit code:
/// 0 success, 1 numeric failure, 2 usage or input failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace growfn::cli
