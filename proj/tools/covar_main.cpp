#include "covar/cli.hpp"

int main(int argc, char** argv) { return covar::run_cli(argc, argv); }
