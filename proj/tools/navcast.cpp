#include "navcast/cli.hpp"

int main(int argc, char** argv) { return navcast::cli::run(argc, argv); }
