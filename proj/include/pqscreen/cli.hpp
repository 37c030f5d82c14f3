#pragma once

#include <ostream>

namespace pqscreen {

/// Entry point of the pqscreen command line. Returns the process exit code:
/// 0 on success, 1 on a runtime failure, 2 on a usage error. Failures print
/// one line "error: <code>: <message>" to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pqscreen
