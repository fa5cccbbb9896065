#include <iostream>

#include "kgcopy/cli.h"

int main(int argc, char** argv) {
  return kgcopy::RunCli(argc, argv, std::cin, std::cout, std::cerr);
}
