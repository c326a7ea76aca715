#include "freqsift/cli.hpp"

int main(int argc, char** argv) { return freqsift::cli::main(argc, argv); }
