#include <iostream>

#include "hubscope_cli/cli.hpp"

int main(int argc, char** argv) { return hubscope::cli::run(argc, argv, std::cout, std::cerr); }
