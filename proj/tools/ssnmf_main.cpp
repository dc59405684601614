#include "commands.hpp"

int main(int argc, char** argv) { return ssnmf::cli::run(argc, argv); }
