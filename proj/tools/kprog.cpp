#include <iostream>
#include <string>
#include <vector>

#include "kprog/experiment/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return kprog::experiment::run_cli(args, std::cerr);
}
