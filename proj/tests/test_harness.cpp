#include <doctest.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "privcal/errors.hpp"
#include "privcal/harness.hpp"

using namespace privcal;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n_samples = 400;
  cfg.n_trials = 2;
  cfg.seed = 5;
  cfg.fit_epochs = 120;
  cfg.fit_patience = 30;
  cfg.n_threads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("run_experiment is deterministic and ordered by (trial, method)") {
  auto cfg = small_config();
  cfg.methods = {Method::NaiveCpClean, Method::PcpEfficient};
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.size() == 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].trial == static_cast<int>(i / 2));
    REQUIRE(a[i].method == (i % 2 == 0 ? "naive_cp_clean" : "pcp"));
    REQUIRE(a[i].coverage == b[i].coverage);
    REQUIRE(a[i].avg_size == b[i].avg_size);
    REQUIRE(a[i].alpha == 0.1);
    REQUIRE(a[i].seed == 5);
  }
  // PCP rows carry beta_pcp, naive rows carry no beta.
  CHECK(a[0].beta == 0.0);
  CHECK(a[1].beta == 0.005);
}

TEST_CASE("pcp naive and efficient agree end-to-end") {
  auto cfg = small_config();
  cfg.methods = {Method::PcpNaive, Method::PcpEfficient};
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 4);
  for (std::size_t t = 0; t < 2; ++t) {
    REQUIRE(rows[2 * t].coverage == rows[2 * t + 1].coverage);
    REQUIRE(rows[2 * t].avg_size == rows[2 * t + 1].avg_size);
  }
}

TEST_CASE("every corruption mode and weight source runs end-to-end") {
  for (CorruptionMode mode :
       {CorruptionMode::MissingResponse, CorruptionMode::DispersiveNoise,
        CorruptionMode::ContractiveNoise, CorruptionMode::MissingFeatures}) {
    for (WeightSource src :
         {WeightSource::Oracle, WeightSource::EstimatedFromZ, WeightSource::EstimatedFromX}) {
      auto cfg = small_config();
      cfg.n_trials = 1;
      cfg.mode = mode;
      cfg.weight_source = src;
      cfg.methods = {Method::NaiveCpAll, Method::NaiveCpClean, Method::Wcp, Method::TwoStaged,
                     Method::PcpEfficient};
      const auto rows = run_experiment(cfg);
      REQUIRE(rows.size() == 5);
      for (const auto& r : rows) {
        REQUIRE(r.coverage >= 0.0);
        REQUIRE(r.coverage <= 1.0);
        REQUIRE(r.avg_size >= 0.0);
      }
    }
  }
}

TEST_CASE("wcp row label marks infeasibility by weight source") {
  auto cfg = small_config();
  cfg.n_trials = 1;
  cfg.methods = {Method::Wcp};
  cfg.weight_source = WeightSource::Oracle;
  CHECK(run_experiment(cfg)[0].method == "wcp_infeasible");
  cfg.weight_source = WeightSource::EstimatedFromX;
  CHECK(run_experiment(cfg)[0].method == "wcp_naive_x");
}

TEST_CASE("scarce preset runs loo_pcp") {
  ExperimentConfig cfg;
  cfg.n_samples = 120;
  cfg.n_trials = 1;
  cfg.seed = 9;
  cfg.alpha = 0.05;
  cfg.fit_epochs = 60;
  cfg.fit_patience = 15;
  cfg.n_threads = 2;
  apply_config_override(cfg, "scarce_mode", "1");
  REQUIRE(cfg.fractions[2] == 0.0);
  REQUIRE(cfg.methods.size() == 1);
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].method == "loo_pcp");
  CHECK(rows[0].coverage >= 0.5);  // loose smoke bound at this scale
}

TEST_CASE("ablate_beta shares seeds and keys rows by beta") {
  auto cfg = small_config();
  cfg.n_trials = 1;
  cfg.methods = {Method::NaiveCpClean, Method::PcpEfficient};
  const auto rows = ablate_beta(cfg, {0.005, 0.05});
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].beta == 0.005);
  CHECK(rows[3].beta == 0.05);
  // The naive rows are untouched by the ablated beta: same data, same seed.
  CHECK(rows[0].coverage == rows[2].coverage);
  CHECK(rows[0].avg_size == rows[2].avg_size);

  CHECK_THROWS_AS(ablate_beta(cfg, {0.2}), BadBeta);
  CHECK_THROWS_AS(ablate_beta(cfg, {}), BadBeta);
}

TEST_CASE("config files parse with overrides and reject junk") {
  const std::string path = "harness_config_test.cfg";
  {
    std::ofstream out(path);
    out << "# comment\n";
    out << "alpha = 0.2\n";
    out << "methods = naive_cp_clean, pcp\n";
    out << "n_trials = 3\n";
    out << "mode = dispersive_noise\n";
    out << "weight_source = estimated_z\n";
  }
  auto cfg = parse_config_file(path);
  std::remove(path.c_str());
  CHECK(cfg.alpha == 0.2);
  CHECK(cfg.n_trials == 3);
  CHECK(cfg.mode == CorruptionMode::DispersiveNoise);
  CHECK(cfg.weight_source == WeightSource::EstimatedFromZ);
  REQUIRE(cfg.methods.size() == 2);

  apply_config_override(cfg, "alpha", "0.15");
  CHECK(cfg.alpha == 0.15);
  CHECK_THROWS_AS(apply_config_override(cfg, "no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(apply_config_override(cfg, "alpha", "banana"), ConfigError);
  CHECK_THROWS_AS(apply_config_override(cfg, "methods", "teleport"), ConfigError);
}

TEST_CASE("report csv has the exact contracted header") {
  CHECK(report_csv_header() == "trial,method,coverage,avg_size,alpha,beta,seed");
  const std::string path = "harness_report_test.csv";
  ReportRow row;
  row.trial = 0;
  row.method = "pcp";
  row.coverage = 0.9125;
  row.avg_size = 3.25;
  row.alpha = 0.1;
  row.beta = 0.005;
  row.seed = 7;
  write_report_csv({row}, path);
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  std::getline(in, line);
  in.close();
  std::remove(path.c_str());
  CHECK(header == "trial,method,coverage,avg_size,alpha,beta,seed");
  CHECK(line == "0,pcp,0.9125,3.25,0.1,0.005,7");
}

TEST_CASE("uncorrupted data recovers plain split-CP coverage") {
  ExperimentConfig cfg;
  cfg.target_corruption_mean = 0.0;  // probs identically zero
  cfg.methods = {Method::NaiveCpClean};
  cfg.n_trials = 20;
  cfg.n_samples = 2000;
  cfg.seed = 77;
  cfg.fit_epochs = 200;
  cfg.fit_patience = 40;
  cfg.n_threads = 2;
  const auto rows = run_experiment(cfg);
  double cov = 0.0;
  for (const auto& r : rows) cov += r.coverage;
  cov /= static_cast<double>(rows.size());
  CHECK(cov >= 0.88);
  CHECK(cov <= 0.92);
}

TEST_CASE("selfcheck passes clean, fails under fault injection, stays in budget") {
  const auto start = std::chrono::steady_clock::now();
  std::ostringstream quiet;
  CHECK(selfcheck(quiet));
  std::ostringstream quiet2;
  CHECK_FALSE(selfcheck(quiet2, SelfcheckFault::FlipQuantileCompare));
  CHECK(quiet2.str().find("FAIL") != std::string::npos);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 60.0);
}
