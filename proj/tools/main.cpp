#include "heavycov/cli.hpp"

int main(int argc, char** argv) { return heavycov::cli::run(argc, argv); }
