#include <iostream>
#include <string>
#include <vector>

#include "pbes/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pbes::cli::run(args, std::cout, std::cerr);
}
