#include <iostream>

#include "linselfcal/cli.hpp"

int main(int argc, char** argv) { return linselfcal::run_cli(argc, argv, std::cout, std::cerr); }
