#ifndef PBES_CLI_HPP
#define PBES_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace pbes::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kIo = 3,
  kNumerical = 4,
};

/// Entry point shared by the executable and the tests. args excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pbes::cli

#endif  // PBES_CLI_HPP
