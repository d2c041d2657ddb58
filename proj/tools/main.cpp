#include "triage/cli/cli.hpp"

int main(int argc, char** argv) { return triage::cli::run_main(argc, argv); }
