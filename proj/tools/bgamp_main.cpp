#include "bgamp/cli.hpp"

int main(int argc, char** argv) { return bgamp::run_cli(argc, argv); }
