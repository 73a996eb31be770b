#include <iostream>

#include "evlab/cli/run.hpp"

int main(int argc, char** argv) {
  return evlab::cli::main_entry(argc, argv, std::cout, std::cerr);
}
