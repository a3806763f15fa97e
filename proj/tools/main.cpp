#include "cli.hpp"

int main(int argc, char** argv) { return carpal::cli::run(argc, argv); }
