#include "qsuggest/cli.hpp"

int main(int argc, char** argv) { return qsuggest::cli::run_cli(argc, argv); }
