#include <iostream>
#include <string>
#include <vector>

#include "hebb/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return hebb::cli::cli_main(args, std::cout, std::cerr);
}
