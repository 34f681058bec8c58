#include "blr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return blr::cli::dispatch(argc, argv, std::cout, std::cerr); }
