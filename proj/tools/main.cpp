#include "commands.hpp"

int main(int argc, char** argv) { return rage::cli::run(argc, argv); }
