#include <iostream>

#include "liefrw/cli.hpp"

int main(int argc, char** argv) { return liefrw::cli::run(argc, argv, std::cout, std::cerr); }
