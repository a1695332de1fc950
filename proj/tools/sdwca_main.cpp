#include "sdwca/cli.hpp"

int main(int argc, char** argv) { return sdwca::run_cli(argc, argv); }
