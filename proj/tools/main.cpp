#include <iostream>

#include "gyreplan/cli/commands.hpp"

int main(int argc, char** argv) { return gyreplan::cli::run_cli(argc, argv, std::cout, std::cerr); }
