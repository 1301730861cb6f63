#include <iostream>
#include <string>
#include <vector>

#include "grvs/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return grvs::run_cli(args, std::cout, std::cerr);
}
