#include "gptomo/cli.hpp"

int main(int argc, char** argv) { return gptomo::cli::run(argc, argv); }
