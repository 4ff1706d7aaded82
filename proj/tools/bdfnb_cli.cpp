#include <iostream>

#include "bdfnb/commands.hpp"

int main(int argc, char** argv) {
  return bdfnb::cli_main(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
