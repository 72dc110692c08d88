#include <iostream>

#include "dfcn/commands.hpp"

int main(int argc, char** argv) { return dfcn::run_cli(argc, argv, std::cout, std::cerr); }
