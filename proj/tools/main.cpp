#include <iostream>

#include "evac/cli.hpp"

int main(int argc, char** argv) { return evac::run_cli(argc, argv, std::cout, std::cerr); }
