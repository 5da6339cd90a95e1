#include "betalab/cli.hpp"

int main(int argc, char** argv) { return betalab::cli::run(argc, argv); }
