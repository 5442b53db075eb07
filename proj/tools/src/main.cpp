#include "pgov_cli/cli.hpp"

int main(int argc, char** argv) { return pgov::cli::run_subcommand(argc, argv); }
