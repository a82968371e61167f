#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "privcal/core.hpp"
#include "privcal/synthgen.hpp"

namespace privcal {

enum class WeightSource { Oracle, EstimatedFromZ, EstimatedFromX };

enum class Method {
  NaiveCpAll,    // split CP on all calibration scores (imputed where missing)
  NaiveCpClean,  // split CP on the clean calibration scores only
  Wcp,           // weighted CP; reads the test conditioning features
  TwoStaged,
  PcpNaive,
  PcpEfficient,
  LooPcp,
};

/// Config token for a method ("pcp" means the efficient variant).
Method method_from_name(const std::string& name);
std::string method_token(Method m);
/// Row label; WCP is reported as infeasible when its weights read the
/// test PI.
std::string method_row_label(Method m, WeightSource source);

struct ExperimentConfig {
  CorruptionMode mode = CorruptionMode::MissingResponse;
  std::vector<Method> methods = {Method::NaiveCpAll, Method::NaiveCpClean, Method::Wcp,
                                 Method::TwoStaged, Method::PcpEfficient};
  double alpha = 0.1;
  double beta_pcp = 0.005;
  double beta_two_staged = 0.05;
  int n_trials = 20;
  int n_samples = 2000;
  std::uint64_t seed = 1;
  WeightSource weight_source = WeightSource::Oracle;
  std::array<double, 4> fractions = {0.5, 0.1, 0.2, 0.2};  // train/valid/calib/test
  bool scarce_mode = false;  // 0.3/0.1/-/0.6 splits and leave-one-out methods
  int grid_size = 201;
  int loo_cap = 500;
  int n_threads = 0;  // 0 = hardware concurrency
  double target_corruption_mean = 0.20;
  // Base-learner budget.
  double fit_lr = 0.1;
  int fit_epochs = 800;
  int fit_patience = 100;
};

struct ReportRow {
  int trial = 0;
  std::string method;
  double coverage = 0.0;
  double avg_size = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
};

/// Per trial: generate -> corrupt -> split -> impute -> fit -> calibrate with
/// every configured method on the identical scores -> evaluate on the clean
/// test responses. Trials run on a worker pool; row order is (trial, method).
std::vector<ReportRow> run_experiment(const ExperimentConfig& config);

/// One run_experiment per beta (shared seeds), rows keyed by the beta column.
std::vector<ReportRow> ablate_beta(const ExperimentConfig& config,
                                   const std::vector<double>& betas);

struct PropertyReport {
  std::string name;
  int instances = 0;
  int failures = 0;
  double seconds = 0.0;

  bool ok() const { return failures == 0; }
};

/// Release-gate property suites, also reused by the acceptance runner.
PropertyReport check_oracle_equivalence(int n_instances, std::uint64_t seed);
PropertyReport check_quantile_monotonicity(int n_instances, std::uint64_t seed,
                                         bool flipped_compare = false);
PropertyReport check_gradient_fd(int n_points, std::uint64_t seed);
PropertyReport check_uniform_reduction(int n_instances, std::uint64_t seed);

enum class SelfcheckFault { None, FlipQuantileCompare };

/// Runs the property suites and prints one line per suite; true when all
/// pass. The fault hook exists so tests can prove the suites can fail.
bool selfcheck(std::ostream& out, SelfcheckFault fault = SelfcheckFault::None);

/// Flat key=value config file; '#' starts a comment. Unknown keys raise
/// ConfigError. Every key can also be overridden one at a time.
ExperimentConfig parse_config_file(const std::string& path);
void apply_config_override(ExperimentConfig& config, const std::string& key,
                           const std::string& value);

std::string report_csv_header();
void write_report_csv(const std::vector<ReportRow>& rows, const std::string& path);

}  // namespace privcal
