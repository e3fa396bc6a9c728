#include "mvlab/cli.hpp"

int main(int argc, char** argv) { return mvlab::run(argc, argv); }
