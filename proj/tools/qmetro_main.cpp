#include "qmetro/cli.hpp"

int main(int argc, char** argv) { return qmetro::cli::run(argc, argv); }
