#include "segkit/cli.hpp"

int main(int argc, char** argv) { return segkit::cli::dispatch(argc, argv); }
