#pragma once

#include <iosfwd>

namespace blr::cli {

/// Exit codes: 0 success, 1 runtime failure, 2 usage error (bad flags, paths,
/// config keys or input files).
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace blr::cli
