#include "modedec/cli.hpp"

int main(int argc, char** argv) { return modedec::cli::run_cli(argc, argv); }
