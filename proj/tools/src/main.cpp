#include <iostream>

#include "ocd/cli.hpp"

int main(int argc, char** argv) { return ocd::cli::run(argc, argv, std::cout, std::cerr); }
