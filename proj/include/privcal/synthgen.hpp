#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "privcal/core.hpp"

namespace privcal {

enum class CorruptionMode { MissingResponse, DispersiveNoise, ContractiveNoise, MissingFeatures };

struct SynthConfig {
  int n = 1000;
  std::uint64_t seed = 0;
  double target_corruption_mean = 0.20;
  CorruptionMode mode = CorruptionMode::MissingResponse;
};

/// The fitted transform from an initial value (here the PI) to a corruption
/// probability: cap at the 85% quantile, divide by the 90% quantile, zero
/// strictly below the 75th percentile of the scaled values, clamp to [0,1],
/// raise to the exponent that hits the target mean.
struct CorruptionModel {
  double cap_value = 0.0;
  double scale = 1.0;
  double zero_below = 0.0;
  double exponent = 1.0;

  double prob(double initial) const;
};

struct ProbPipeline {
  std::vector<double> probs;
  CorruptionModel model;
};

/// Fits the corruption-probability transform on the initial values so that
/// the output mean equals target_mean within 1e-6 (bisection on the
/// exponent). Throws TargetUnreachable when the positive mass after zeroing
/// cannot reach the target.
ProbPipeline corruption_probabilities(const std::vector<double>& initial, double target_mean);

struct SynthData {
  Dataset data;  // clean: y_obs = ground truth, m = 0
  std::vector<double> probs;
  CorruptionModel prob_model;
};

/// Ten uniform features, a compound-Poisson PI with banded heteroscedastic
/// noise on the response, plus the fitted corruption probabilities.
/// Deterministic per seed.
SynthData gen_synthetic(const SynthConfig& config);

/// Draws M_i ~ Bernoulli(probs_i) and corrupts the observed copies per mode;
/// ground_truth_y is never touched.
Dataset apply_corruption(const Dataset& dataset, const std::vector<double>& probs,
                         CorruptionMode mode, std::uint64_t seed);

/// CSV with columns x_0..x_{d-1}, z_0..z_{k-1}, y_obs, m, y_clean, prob;
/// missing cells are empty fields.
void dump_csv(const Dataset& dataset, const std::vector<double>& probs, const std::string& path);

struct LoadedData {
  Dataset data;
  std::vector<double> probs;
};
LoadedData load_csv(const std::string& path);

}  // namespace privcal
