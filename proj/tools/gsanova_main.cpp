#include "gsanova/cli.hpp"

int main(int argc, char** argv) { return gsanova::cli::main_entry(argc, argv); }
