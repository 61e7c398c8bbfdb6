#include "tabprompt/cli.hpp"

int main(int argc, char** argv) { return tabprompt::cli::run(argc, argv); }
