#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
    return tnfcm::cli::run_cli(std::vector<std::string>(argv, argv + argc));
}
