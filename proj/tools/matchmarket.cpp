#include "matchmarket/cli.hpp"

int main(int argc, char** argv) { return matchmarket::cli::run_cli(argc, argv); }
