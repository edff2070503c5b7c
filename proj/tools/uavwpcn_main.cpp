#include <string>
#include <vector>

#include "wpcn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return wpcn::cli::run(args);
}
