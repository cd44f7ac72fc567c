#include <iostream>
#include <string>
#include <vector>

#include "slowpass/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return slowpass::run_cli(args, std::cout, std::cerr);
}
