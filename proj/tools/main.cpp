#include <iostream>
#include <string>
#include <vector>

#include "sparselbm/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return sparselbm::run_command(args, std::cout, std::cerr);
}
