#include <CLI11.hpp>

#include "gridlimit/lattice.hpp"

int main(int argc, char** argv) {
  CLI::App app{"gridlimit: NLS ground states on periodic metric grids"};
  app.require_subcommand(1);
  CLI11_PARSE(app, argc, argv);
  return 0;
}
