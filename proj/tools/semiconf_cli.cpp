#include "semiconf/cli.hpp"

int main(int argc, char** argv) { return semiconf::cli::run(argc, argv); }
