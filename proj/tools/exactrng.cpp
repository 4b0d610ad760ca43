#include "cli_app.hpp"

int main(int argc, char** argv) { return exactrng::cli::run(argc, argv); }
