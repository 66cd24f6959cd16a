#include <iostream>

#include "haptofv/cli.hpp"

int main(int argc, char** argv) {
    return haptofv::cli_main(argc, argv, std::cout, std::cerr);
}
