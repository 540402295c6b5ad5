#include "imagine/cli/commands.hpp"

int main(int argc, char** argv) { return imagine::cli::run_cli(argc, argv); }
