#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace merr {

/// Runs the `merr` command line. Returns 0 on success, 1 on a usage error and
/// 2 on a data or numeric error. `args` excludes the program name.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace merr
