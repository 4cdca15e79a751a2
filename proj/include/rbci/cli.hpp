// Command-line driver: simulation, fitting, selection, evaluation and
// comparison, with resolved-config echo and digest-checked reruns.

#pragma once

#include <string>
#include <vector>

namespace rbci::cli {

/// Entry point shared by the binary and the tests. Returns a process exit
/// code; errors are reported on stderr.
int run(const std::vector<std::string>& args);

}  // namespace rbci::cli
