#include <iostream>

#include "mhqa/cli.hpp"

int main(int argc, char** argv) {
  return mhqa::cli::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
