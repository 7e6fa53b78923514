#include "cli.hpp"

int main(int argc, char** argv) { return chtf::cli::run(argc, argv); }
