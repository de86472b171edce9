#include <iostream>

#include "hlt/cli/cli.hpp"

int main(int argc, char** argv) {
    return hlt::cli::dispatch(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
