#include <iostream>

#include "lonorm/cli.hpp"

int main(int argc, char** argv) {
  return lonorm::run_cli(argc, argv, std::cout, std::cerr);
}
