#include "pgrowth/cli/app.hpp"

int main(int argc, char** argv) { return pgrowth::run_cli(argc, argv); }
