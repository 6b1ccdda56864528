#include <vector>

#include "linktt/cli/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return linktt::cli::run_cli(args);
}
