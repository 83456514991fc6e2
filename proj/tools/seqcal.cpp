#include <string>
#include <vector>

#include "seqcal/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return seqcal::cli::run_cli(std::move(args));
}
