#pragma once

#include <string>
#include <vector>

namespace gaitopt {

/// Command-line entry point (generate | solve | evaluate | report |
/// selftest). Returns the process exit code: 0 success, 1 runtime or
/// validation failure, 2 flag errors.
int cli_main(const std::vector<std::string>& args);

}  // namespace gaitopt
