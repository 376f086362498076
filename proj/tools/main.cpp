#include <iostream>
#include <string>
#include <vector>

#include "cubeforest/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return cubeforest::cli::run(args, std::cout, std::cerr);
}
