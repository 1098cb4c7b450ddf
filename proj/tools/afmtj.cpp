#include <iostream>
#include <string>
#include <vector>

#include "afmtj/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return afmtj::run(args, std::cout, std::cerr);
}
