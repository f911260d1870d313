#include <iostream>
#include <string>
#include <vector>

#include "asrsim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return asrsim::cli::run(args, std::cout, std::cerr);
}
