#include <iostream>

#include "leapctl/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return leapctl::run(args, std::cout, std::cerr);
}
