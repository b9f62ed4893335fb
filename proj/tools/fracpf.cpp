#include "fracpf/cli.hpp"

int main(int argc, char** argv) { return fracpf::run_cli(argc, argv); }
