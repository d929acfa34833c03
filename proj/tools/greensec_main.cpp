#include "greensec/cli.hpp"

int main(int argc, char** argv) { return greensec::cli_main(argc, argv); }
