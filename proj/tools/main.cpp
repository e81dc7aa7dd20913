#include <cstdlib>
#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  std::optional<std::string> env_seed;
  if (const char* s = std::getenv("GFL_SEED")) env_seed = s;
  return gfl::cli::run({argv + 1, argv + argc}, std::cout, std::cerr, env_seed);
}
