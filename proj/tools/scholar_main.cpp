#include <iostream>

#include "scholar/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return scholar::cli::run_cli(args, std::cout, std::cerr, std::cin);
}
