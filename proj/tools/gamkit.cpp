#include "gamkit/cli.hpp"

int main(int argc, char** argv) { return gamkit::cli::run_cli(argc, argv); }
