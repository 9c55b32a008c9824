#include <iostream>

#include "zpj/cli.hpp"

int main(int argc, char** argv) {
  return zpj::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
