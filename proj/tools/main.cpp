#include <iostream>

#include "fluidq/cli.hpp"

int main(int argc, char** argv) { return fluidq::cli::run(argc, argv, std::cout, std::cerr); }
