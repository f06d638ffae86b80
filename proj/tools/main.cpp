#include <iostream>

#include "sinefm/cli.hpp"

int main(int argc, char** argv) {
    return sinefm::cli::run(argc, argv, std::cout, std::cerr);
}
