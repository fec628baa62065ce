#include <iostream>

#include "acbem_cli/cli.hpp"

int main(int argc, char** argv) { return acbem::cli::run_cli(argc, argv, std::cout, std::cerr); }
