#include "cli_app.hpp"

int main(int argc, char** argv) { return cte::cli::run(argc, argv); }
