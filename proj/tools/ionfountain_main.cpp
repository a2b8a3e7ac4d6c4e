#include "ionfountain/cli.hpp"

int main(int argc, char** argv) { return ionfountain::cli::run_cli(argc, argv); }
