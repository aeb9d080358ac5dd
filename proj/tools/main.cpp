#include "sfde/cli.hpp"

int main(int argc, char** argv) { return sfde::run_cli(argc, argv); }
