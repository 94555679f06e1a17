#include "mmc/cli.hpp"

int main(int argc, char** argv) { return mmc::cli_main(argc, argv); }
