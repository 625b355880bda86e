#include <iostream>

#include "imuscale_cli/commands.hpp"

int main(int argc, char** argv) { return imuscale::cli::run(argc, argv, std::cout, std::cerr); }
