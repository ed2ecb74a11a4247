#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "kronwig/nc_series.hpp"
#include "kronwig/resolvent_lab.hpp"

namespace kronwig {

// Experiment configuration; every field has a default, and the fully
// defaulted config runs the compare experiment at n=250 with 5 replicates.
// JSON round-trips losslessly via config_to_json / config_from_json.
struct ExperimentConfig {
  std::string experiment = "compare";  // compare | predict | solve |
                                       // resolvent-scan | oracle-check | fixedpoint
  int n = 250;
  std::vector<int> n_list;             // multi-n experiments; empty -> derived from n
  int replicates = 5;
  std::uint64_t seed = 1;
  std::vector<double> k_list = {1.0, 1.3, 3.0};
  std::vector<double> corr_list = {0.0, 0.25, 0.5, 0.75, 1.0};
  int M = 12;
  double z = 0.0;                      // series point; <= 0 selects 1 + 16/eta^2
  double z_im = 1.0;                   // resolvent experiments run at z = i*z_im
  double eta = 0.5;                    // commutative regularizer for oracle-check
  double tol = 1e-10;
  int max_iter = -1;                   // <= 0 -> operation defaults
  std::string out;                     // output file; empty -> stdout
  bool strict = false;                 // threshold verdicts drive the exit code

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

// Long-format result row; every row is reproducible from (config, seed).
struct ResultRow {
  std::string experiment;
  double k = 0.0;
  double corr = 0.0;
  int n = 0;
  int replicate = -1;  // -1 marks aggregate rows
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
};

using ResultTable = std::vector<ResultRow>;

// Fixed column order, 17 significant digits: byte-identical for identical
// (config, seed).
void write_csv(const ResultTable& table, std::ostream& os);
std::string table_to_csv(const ResultTable& table);

// Figure-style comparison: per (k, corr) cell, fixed profiles, fresh GOE
// A,B per replicate; records 1/(2 f(X_hat)) per replicate and the cell's
// mean, SD, series prediction T, and |mean - T|.
ResultTable run_compare(const ExperimentConfig& config);

// Series-only prediction for the configured law: T and T' with per-m
// breakdown and the remainder certificate, as a JSON document.
std::string run_predict(const ExperimentConfig& config);

// Single-instance solves: objective, 1/(2f), CG iterations/residual,
// constraint value per replicate.
ResultTable run_solve(const ExperimentConfig& config);

// Entry-class scaling scan over n_list (default {40, 80, 160}) at z = i*z_im.
ResultTable run_scan(const ExperimentConfig& config);

// CG-vs-spectral agreement on commutative instances Theta = Xi = eta I.
ResultTable run_oracle(const ExperimentConfig& config);

// Fixed-point convergence telemetry: residual, iterations, Im-positivity
// margin, trace; plus the Stieltjes deviation when the instance admits the
// exact spectral path.
ResultTable run_fixedpoint(const ExperimentConfig& config);

// Dispatches on config.experiment, writes CSV/JSON to config.out (stdout when
// empty), returns the process exit code: 0 iff the run completed; under
// strict mode threshold verdicts fail the exit code too.
int run_experiment(const ExperimentConfig& config);

// Worker-pool width: KRONWIG_THREADS when set (>=1), else hardware
// concurrency, else 1.
int worker_count();

}  // namespace kronwig
