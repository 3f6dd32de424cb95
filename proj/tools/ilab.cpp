#include "ilab/cli.hpp"

int main(int argc, char** argv) { return ilab::cli::main_impl(argc, argv); }
