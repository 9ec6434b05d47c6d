#include "continuity/cli.hpp"

int main(int argc, char** argv) {
    return continuity::run_cli(argc, argv);
}
