#include <string>
#include <vector>

#include "vop/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vop::cli::run(args);
}
