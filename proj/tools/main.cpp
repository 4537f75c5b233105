#include "spikemr/cli.hpp"

int main(int argc, char** argv) { return spikemr::cli::run(argc, argv); }
