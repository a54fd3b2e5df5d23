// Command-line driver for stationary-density adjoint sensitivity analysis.
// Subcommands are filled in module by module; see README for usage.
#include <CLI11.hpp>

int main(int argc, char** argv) {
  CLI::App app{"Adjoint sensitivities of ergodic averages for chaotic maps and flows"};
  app.require_subcommand(0);
  CLI11_PARSE(app, argc, argv);
  return 0;
}
