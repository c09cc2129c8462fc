#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return qoie::cli::run(argc, argv, std::cout, std::cerr); }
