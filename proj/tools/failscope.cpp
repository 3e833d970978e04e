#include <iostream>

#include "failscope/cli.hpp"

int main(int argc, char** argv) { return failscope::run_cli(argc, argv, std::cout, std::cerr); }
