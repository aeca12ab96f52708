#include "mmtensor/cli.hpp"

int main(int argc, char** argv) { return mmt::run_cli(argc, argv); }
