#include <vector>

#include "rbci/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rbci::cli::run(args);
}
