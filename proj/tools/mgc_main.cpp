#include "cli.hpp"

int main(int argc, char** argv) { return mgc::cli::cli_main(argc, argv); }
