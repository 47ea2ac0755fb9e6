#include <iostream>

#include "sitest/cli.hpp"

int main(int argc, char** argv) { return sitest::cli::run(argc, argv, std::cout, std::cerr); }
