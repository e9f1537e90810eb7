#include "critheat/cli.hpp"

int main(int argc, char** argv) { return critheat::main_entry(argc, argv); }
