#include <iostream>

#include "printacc/cli.hpp"

int main(int argc, char** argv)
{
    return printacc::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
