#include "dynclean_cli/cli.hpp"

int main(int argc, char** argv) { return dynclean::cli::main(argc, argv); }
