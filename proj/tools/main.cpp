#include "unrisk/cli.hpp"

int main(int argc, char** argv) { return unrisk::cli::main(argc, argv); }
