#include "idsml/cli.hpp"

int main(int argc, char** argv) { return idsml::cli::run(argc, argv); }
