#include "ghostpixel/cli.hpp"

int main(int argc, char** argv) { return ghostpixel::cli::run(argc, argv); }
