#include <vector>

#include "gaitopt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return gaitopt::cli_main(args);
}
