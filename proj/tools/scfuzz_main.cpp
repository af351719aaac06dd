#include <iostream>

#include "scfuzz/cli/commands.hpp"

int main(int argc, char** argv) { return scfuzz::cli::run(argc, argv, std::cout, std::cerr); }
