#include "crashlens/cli.hpp"

int main(int argc, char** argv) { return crashlens::cli::run(argc, argv); }
