#pragma once

#include <ostream>

namespace lidarflow::cli {

/// Entry point of the `lidarflow` tool. Diagnostics go to `err`, summaries to
/// `out`; returns the process exit code (0 on success, see exit_code()).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lidarflow::cli
