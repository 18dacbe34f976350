#include "ssa/commands.hpp"

int main(int argc, char** argv) {
    return ssa::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
