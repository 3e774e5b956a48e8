#include <iostream>

#include "usjoint/cli.hpp"

int main(int argc, char** argv) { return usjoint::run_cli(argc, argv, std::cout, std::cerr); }
