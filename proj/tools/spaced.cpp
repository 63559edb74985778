#include <string>
#include <vector>

#include "spaced/cli.hpp"

int main(int argc, char** argv) {
    return spaced::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
