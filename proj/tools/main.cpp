#include <iostream>

#include "psce/cli.hpp"

int main(int argc, char** argv) {
  return psce::cli::run(argc, argv, std::cout, std::cerr);
}
