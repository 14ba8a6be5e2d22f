#include "goldrank/cli.hpp"

int main(int argc, char** argv) { return goldrank::cli::run_cli(argc, argv); }
