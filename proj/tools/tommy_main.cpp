#include <string>
#include <vector>

#include "tommy/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tommy::cli::run(args);
}
