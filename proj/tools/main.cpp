#include <iostream>

#include "sdreamer/cli/commands.hpp"

int main(int argc, char** argv) {
    return sdreamer::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
