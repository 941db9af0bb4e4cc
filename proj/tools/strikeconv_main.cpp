#include <iostream>

#include "strikeconv/cli.hpp"

int main(int argc, char** argv) { return strikeconv::run_cli(argc, argv, std::cout, std::cerr); }
