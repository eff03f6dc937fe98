#include <iostream>

#include "causex/cli.hpp"

int main(int argc, char** argv) { return causex::run_cli(argc, argv, std::cout, std::cerr); }
