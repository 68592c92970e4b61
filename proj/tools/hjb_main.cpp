#include "hjb/cli.hpp"

int main(int argc, char** argv) { return hjb::cli_main(argc, argv); }
