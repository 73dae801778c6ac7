#include "coprosim/harness/cli.hpp"

int main(int argc, char** argv) { return coprosim::harness::cli_main(argc, argv); }
