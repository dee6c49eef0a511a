#include "agentdistill/cli/cli.hpp"

int main(int argc, char** argv) { return agentdistill::cli::main(argc, argv); }
