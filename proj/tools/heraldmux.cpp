#include <iostream>

#include "heraldmux/cli.h"

int main(int argc, char** argv) { return heraldmux::run_cli(argc, argv, std::cout, std::cerr); }
