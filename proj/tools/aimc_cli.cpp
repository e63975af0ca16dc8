#include "aimc/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return aimc::run_cli(argc, argv, std::cout, std::cerr);
}
