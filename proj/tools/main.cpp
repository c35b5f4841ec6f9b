#include "bkz/cli.hpp"

int main(int argc, char** argv) { return bkz::cli::run_main(argc, argv); }
