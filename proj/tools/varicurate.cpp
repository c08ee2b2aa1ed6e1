#include <string>
#include <vector>

#include "varicurate/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return varicurate::cli::run(args).exit_code;
}
