#include "refray/cli.hpp"

int main(int argc, char** argv) { return refray::cli::run(argc, argv); }
