#include "betarce/cli.hpp"

int main(int argc, char** argv) { return betarce::cli(argc, argv); }
