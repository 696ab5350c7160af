#include <iostream>
#include <string>
#include <vector>

#include "stfnet/cli.hpp"

int main(int argc, char** argv) {
  return stfnet::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
