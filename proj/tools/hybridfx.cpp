#include <string>
#include <vector>

#include <hybridfx/cli.hpp>

int main(int argc, char** argv) {
    return hybridfx::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
