#include "commands.hpp"

int main(int argc, char** argv) {
  return spectrec::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
