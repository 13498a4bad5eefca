#include "qlfr/cli.hpp"

int main(int argc, char** argv) {
    return qlfr::cli::dispatch(argc, argv);
}
