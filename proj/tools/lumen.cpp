#include "lumen/cli/commands.hpp"

int main(int argc, char** argv) { return lumen::cli::run_cli(argc, argv); }
