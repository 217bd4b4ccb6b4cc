#include "skillfuse/cli.hpp"

int main(int argc, char** argv) { return skillfuse::cli::dispatch(argc, argv); }
