#include <iostream>
#include <string>
#include <vector>

#include "tcfg/pipeline.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tcfg::pipeline::run(args, std::cout, std::cerr);
}
