#include "pqscreen/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return pqscreen::run_cli(argc, argv, std::cout, std::cerr); }
