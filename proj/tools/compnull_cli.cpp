#include "compnull/cli.hpp"

int main(int argc, char** argv) { return compnull::cli_dispatch(argc, argv); }
