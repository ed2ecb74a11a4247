#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "kronwig/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"kronwig - Kronecker-structured random matrix experiments"};
  app.get_formatter()->column_width(28);

  std::string experiment = "compare";
  std::string config_path, out;
  int n = -1, replicates = -1, M = -1;
  std::uint64_t seed = 0;
  double k = 0, corr = -1, z = 0;
  bool strict = false;

  auto* opt_exp =
      app.add_option("experiment", experiment,
                     "one of: compare, predict, solve, resolvent-scan, oracle-check, fixedpoint")
          ->capture_default_str();
  app.add_option("--config", config_path, "JSON config file; flags override its values");
  auto* opt_n = app.add_option("--n", n, "profile/matrix dimension");
  auto* opt_rep = app.add_option("--replicates", replicates, "replicates per cell");
  auto* opt_seed = app.add_option("--seed", seed, "root seed");
  auto* opt_k = app.add_option("--k", k, "single profile-scale k (replaces the k grid)");
  auto* opt_corr = app.add_option("--corr", corr, "single copula correlation (replaces the grid)");
  auto* opt_m = app.add_option("--M", M, "series truncation order");
  auto* opt_z = app.add_option("--z", z, "series evaluation point (<= 0 selects the default)");
  auto* opt_out = app.add_option("--out", out, "output path (stdout when omitted)");
  app.add_flag("--strict", strict, "threshold verdicts affect the exit code");

  CLI11_PARSE(app, argc, argv);

  try {
    kronwig::ExperimentConfig config;
    if (!config_path.empty()) config = kronwig::load_config(config_path);
    if (opt_exp->count()) config.experiment = experiment;
    if (opt_n->count()) config.n = n;
    if (opt_rep->count()) config.replicates = replicates;
    if (opt_seed->count()) config.seed = seed;
    if (opt_k->count()) config.k_list = {k};
    if (opt_corr->count()) config.corr_list = {corr};
    if (opt_m->count()) config.M = M;
    if (opt_z->count()) config.z = z;
    if (opt_out->count()) config.out = out;
    if (strict) config.strict = true;
    return kronwig::run_experiment(config);
  } catch (const std::exception& e) {
    std::cerr << "kronwig: " << e.what() << "\n";
    return 1;
  }
}
