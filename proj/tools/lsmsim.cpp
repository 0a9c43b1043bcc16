#include "lsmsim/cli.hpp"

int main(int argc, char** argv) { return lsmsim::run_cli(argc, argv); }
