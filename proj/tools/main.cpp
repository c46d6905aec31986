#include "merr/cli.hpp"

int main(int argc, char** argv) { return merr::cli_main(argc, argv); }
