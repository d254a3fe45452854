#include <iostream>

#include "uavfl/cli.hpp"

int main(int argc, char** argv) {
  return uavfl::cli::main_entry(argc, argv, std::cout, std::cerr);
}
