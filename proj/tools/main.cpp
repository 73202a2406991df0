#include <iostream>

#include "shapeboost/cli.hpp"

int main(int argc, char** argv) { return shapeboost::run_cli(argc, argv, std::cout, std::cerr); }
