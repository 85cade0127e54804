#include "choreo/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return choreo::cli::run(argc, argv, std::cout, std::cerr); }
