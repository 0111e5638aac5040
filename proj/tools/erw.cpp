#include "erw/cli.hpp"

int main(int argc, char** argv) { return erw::cli::main(argc, argv); }
