#include "gesmatch/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return gesmatch::cli::run_cli(argc, argv, std::cout, std::cerr);
}
