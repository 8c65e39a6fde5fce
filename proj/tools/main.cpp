#include "foldfinder/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return foldfinder::run_cli(argc, argv, std::cout, std::cerr); }
