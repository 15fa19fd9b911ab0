#include <string>
#include <vector>

#include "rae/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return rae::cli::run(args);
}
