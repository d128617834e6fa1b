#include "argmm/harness.hpp"

int main(int argc, char** argv) { return argmm::cli_main(argc, argv); }
