#include "efg/cli_io.hpp"

int main(int argc, char** argv) { return efg::cli_main(argc, argv); }
