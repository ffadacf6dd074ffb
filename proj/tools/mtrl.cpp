#include <iostream>

#include "mtrl/cli.hpp"

int main(int argc, char** argv) { return mtrl::cli_main(argc, argv, std::cout, std::cerr); }
