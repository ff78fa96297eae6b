#include <iostream>
#include <string>
#include <vector>

#include "kinv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return kinv::run_cli(args, std::cout, std::cerr);
}
