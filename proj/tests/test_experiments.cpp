#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kronwig/experiments.hpp"

using namespace kronwig;

namespace {

std::vector<double> values_of(const ResultTable& t, const std::string& metric,
                              bool aggregates = false) {
  std::vector<double> out;
  for (const ResultRow& r : t)
    if (r.metric == metric && (aggregates ? r.replicate == -1 : r.replicate >= 0))
      out.push_back(r.value);
  return out;
}

}  // namespace

TEST_CASE("config json round-trips through serialization") {
  ExperimentConfig c;
  CHECK(config_from_json(config_to_json(c)) == c);

  c.experiment = "oracle-check";
  c.n = 77;
  c.n_list = {10, 20};
  c.replicates = 3;
  c.seed = 99;
  c.k_list = {2.5};
  c.corr_list = {0.1, 0.9};
  c.M = 8;
  c.z = 4.5;
  c.z_im = 0.25;
  c.eta = 1.5;
  c.tol = 1e-8;
  c.max_iter = 500;
  c.out = "somewhere.csv";
  c.strict = true;
  CHECK(config_from_json(config_to_json(c)) == c);
}

TEST_CASE("config parsing rejects junk") {
  CHECK_THROWS_AS(config_from_json("{\"bogus\": 1}"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{\"experiment\": \"nope\"}"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{\"n\": 0}"), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("not json"), std::invalid_argument);
  CHECK_THROWS_AS(load_config("/nonexistent/path.json"), std::runtime_error);
}

TEST_CASE("csv output is deterministic and correctly shaped") {
  ExperimentConfig c;
  c.experiment = "solve";
  c.n = 30;
  c.replicates = 2;
  c.seed = 5;
  c.k_list = {1.3};
  c.corr_list = {0.5};

  const std::string csv1 = table_to_csv(run_solve(c));
  const std::string csv2 = table_to_csv(run_solve(c));
  CHECK(csv1 == csv2);
  CHECK(csv1.rfind("experiment,k,corr,n,replicate,seed,metric,value\n", 0) == 0);

  // Every line has 8 columns.
  std::size_t pos = 0;
  int lines = 0;
  while (pos < csv1.size()) {
    const std::size_t end = csv1.find('\n', pos);
    const std::string line = csv1.substr(pos, end - pos);
    CHECK(std::count(line.begin(), line.end(), ',') == 7);
    pos = end + 1;
    ++lines;
  }
  CHECK(lines == 1 + 2 * 6);  // header + 6 metrics per replicate
}

TEST_CASE("solve rows satisfy the solver guarantees") {
  ExperimentConfig c;
  c.experiment = "solve";
  c.n = 40;
  c.replicates = 3;
  c.seed = 11;
  c.k_list = {1.0};
  c.corr_list = {0.25};
  const ResultTable t = run_solve(c);

  const auto cons = values_of(t, "constraint_error");
  REQUIRE(cons.size() == 3);
  for (double e : cons) CHECK(e <= 1e-9);
  for (double q : values_of(t, "one_over_2f")) CHECK(q > 0.0);
  for (double r : values_of(t, "cg_residual")) CHECK(r <= c.tol);
}

TEST_CASE("compare cells aggregate their replicates") {
  ExperimentConfig c;
  c.experiment = "compare";
  c.n = 40;
  c.replicates = 3;
  c.seed = 2;
  c.k_list = {3.0};
  c.corr_list = {0.5};
  c.M = 6;
  const ResultTable t = run_compare(c);

  const auto reps = values_of(t, "one_over_2f");
  REQUIRE(reps.size() == 3);
  const auto mean = values_of(t, "mean_one_over_2f", true);
  REQUIRE(mean.size() == 1);
  double acc = 0.0;
  for (double v : reps) acc += v;
  CHECK(mean[0] == doctest::Approx(acc / reps.size()).epsilon(1e-12));

  const auto pred = values_of(t, "T_pred", true);
  const auto dev = values_of(t, "abs_deviation", true);
  REQUIRE(pred.size() == 1);
  REQUIRE(dev.size() == 1);
  CHECK(dev[0] == doctest::Approx(std::abs(mean[0] - pred[0])).epsilon(1e-12));
  CHECK(values_of(t, "failed").empty());

  // At k = 3 the weights concentrate: prediction and mean are within ~25%
  // even at this small n (the acceptance run checks the 3-sigma band).
  CHECK(dev[0] <= 0.25 * std::abs(pred[0]));
}

TEST_CASE("oracle-check stays at solver precision") {
  ExperimentConfig c;
  c.experiment = "oracle-check";
  c.n = 40;
  c.replicates = 2;
  c.seed = 3;
  c.eta = 0.5;
  c.tol = 1e-12;
  const ResultTable t = run_oracle(c);
  const auto rel = values_of(t, "rel_error");
  REQUIRE(rel.size() == 2);
  for (double r : rel) CHECK(r <= 1e-8);
  const auto agg = values_of(t, "max_rel_error", true);
  REQUIRE(agg.size() == 1);
  CHECK(agg[0] == doctest::Approx(std::max(rel[0], rel[1])).epsilon(1e-15));
}

TEST_CASE("resolvent scan emits medians per n and global slopes") {
  ExperimentConfig c;
  c.experiment = "resolvent-scan";
  c.n_list = {24, 48};
  c.replicates = 2;
  c.seed = 7;
  const ResultTable t = run_scan(c);

  int medians = 0, slopes = 0;
  for (const ResultRow& r : t) {
    if (r.metric == "diag_median" || r.metric == "semi_median" || r.metric == "off_median") {
      CHECK((r.n == 24 || r.n == 48));
      CHECK(r.value > 0.0);
      ++medians;
    }
    if (r.metric == "slope_diag" || r.metric == "slope_semi" || r.metric == "slope_off") {
      CHECK(r.n == 0);
      ++slopes;
    }
  }
  CHECK(medians == 6);
  CHECK(slopes == 3);
  for (const ResultRow& r : t)
    if (r.metric == "slope_off") CHECK(r.value < -0.5);
}

TEST_CASE("fixedpoint rows meet the tolerance and positivity margins") {
  ExperimentConfig c;
  c.experiment = "fixedpoint";
  c.n = 30;
  c.replicates = 2;
  c.seed = 13;
  c.k_list = {1.0};
  c.corr_list = {0.5};
  c.tol = 1e-10;
  const ResultTable t = run_fixedpoint(c);

  for (double r : values_of(t, "residual")) CHECK(r <= c.tol);
  for (double im : values_of(t, "im_min_eigenvalue")) CHECK(im >= -1e-10);
  for (double ti : values_of(t, "trace_im")) CHECK(ti > 0.0);
  // Commutative audit block (aggregate rows).
  CHECK(values_of(t, "deviation_b", true).size() == 1);
  CHECK(values_of(t, "m_im", true).at(0) > 0.0);
}

TEST_CASE("predict emits parseable json with both weighting variants") {
  ExperimentConfig c;
  c.experiment = "predict";
  c.k_list = {3.0};
  c.corr_list = {0.5};
  c.M = 8;
  const std::string text = run_predict(c);
  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j.contains("T"));
  CHECK(j.contains("T_prime"));
  CHECK(j.contains("moments"));
  CHECK(j["T"].contains("value"));
  CHECK(j["T"]["M"].get<int>() == 8);
  // Under the sampling law U' = U, so the two variants coincide.
  CHECK(j["T"]["value"].get<double>() ==
        doctest::Approx(j["T_prime"]["value"].get<double>()).epsilon(1e-12));
  CHECK(j["eta"].get<double>() == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("run_experiment writes the requested output file") {
  ExperimentConfig c;
  c.experiment = "solve";
  c.n = 25;
  c.replicates = 1;
  c.seed = 17;
  c.k_list = {1.0};
  c.corr_list = {0.0};
  c.out = "/tmp/kronwig_test_solve.csv";
  CHECK(run_experiment(c) == 0);
  std::ifstream in(c.out);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "experiment,k,corr,n,replicate,seed,metric,value");
  std::remove(c.out.c_str());
}

TEST_CASE("strict mode gates the exit code") {
  ExperimentConfig c;
  c.experiment = "oracle-check";
  c.n = 30;
  c.replicates = 1;
  c.seed = 19;
  c.strict = true;
  c.out = "/tmp/kronwig_test_oracle.csv";
  CHECK(run_experiment(c) == 0);  // precision criterion holds
  std::remove(c.out.c_str());
}

TEST_CASE("worker count respects the environment override") {
  setenv("KRONWIG_THREADS", "3", 1);
  CHECK(worker_count() == 3);
  setenv("KRONWIG_THREADS", "0", 1);
  CHECK(worker_count() >= 1);
  unsetenv("KRONWIG_THREADS");
  CHECK(worker_count() >= 1);
}
