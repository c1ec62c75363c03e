#include <string>
#include <vector>

#include "odeaug/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return odeaug::cli::execute(args);
}
