#include "ptsim/cli.hpp"

int main(int argc, char** argv) {
    return ptsim::cli::run(argc, argv);
}
