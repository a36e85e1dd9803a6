#include <iostream>

#include "varinfer/cli/commands.hpp"

int main(int argc, char** argv) { return varinfer::cli::run_cli(argc, argv, std::cout, std::cerr); }
