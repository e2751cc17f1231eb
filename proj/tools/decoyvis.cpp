#include <iostream>

#include "decoyvis/cli.hpp"

int main(int argc, char** argv) { return decoyvis::run_cli(argc, argv, std::cout, std::cerr); }
