#include <CLI11.hpp>

#include <iostream>

#include "pesin/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace pesin::cli;
  CLI::App app{"Pesin theory experiments for random dynamical systems"};
  app.require_subcommand(1);

  RunOptions opts;
  std::uint64_t seed = 0;
  std::string out;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"spectrum", "Lyapunov spectra along seeded words"},
      {"pesin", "Pesin-set certificates on a grid"},
      {"manifold", "local stable charts and the graph-transform ledger"},
      {"holonomy", "Poincare map between two transversals"},
      {"verify-act", "Jacobian of the holonomy against 1 +/- act_C"},
      {"report", "collect the run summaries of an output directory"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config_path, "experiment config (YAML)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", opts.threads, "worker threads (0: all)")->check(CLI::NonNegativeNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }
  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--out")) opts.out = out;
  return run_command(sub->get_name(), opts, std::cout, std::cerr);
}
