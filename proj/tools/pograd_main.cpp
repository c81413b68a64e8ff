#include "pograd/cli.hpp"

int main(int argc, char** argv) { return pograd::run_cli(argc, argv); }
