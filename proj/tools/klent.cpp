#include "klent/cli.hpp"

int main(int argc, char** argv) { return klent::cli::run_cli(argc, argv); }
