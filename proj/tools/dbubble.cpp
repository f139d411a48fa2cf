#include "dbubble/cli.hpp"

int main(int argc, char** argv) { return dbubble::run_cli(argc, argv); }
