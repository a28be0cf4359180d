#include "dhlab/cli.hpp"

int main(int argc, char** argv) { return dhlab::run_cli(argc, argv); }
