#include "hebbsal/cli.hpp"

int main(int argc, char** argv) { return hebbsal::run_cli(argc, argv); }
