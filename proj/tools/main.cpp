#include "commands.hpp"

int main(int argc, char** argv) { return leqg::cli::run(argc, argv); }
