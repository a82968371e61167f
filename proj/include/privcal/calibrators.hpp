#pragma once

#include <vector>

#include "privcal/core.hpp"
#include "privcal/scores.hpp"
#include "privcal/weights.hpp"
#include "privcal/wquantile.hpp"

namespace privcal {

/// One calibration sample as the calibrators see it. Corrupted entries
/// (m = 1) may carry a NaN score; only their weights are read, except by
/// the naive calibrator when it is told to use corrupted scores.
struct CalEntry {
  double score = 0.0;
  double weight = 1.0;
  int m = 0;
};

struct CalibInput {
  std::vector<CalEntry> entries;
  double alpha = 0.1;
  double beta = 0.005;
};

/// Split-CP quantile over the selected scores (all entries, or clean-only).
/// Returns Infinite when the selection is empty.
Threshold calibrate_naive(const CalibInput& input, bool use_corrupted);

/// Weighted quantile over the clean entries' (score, weight) atoms with the
/// test weight as the mass at infinity.
Threshold calibrate_wcp(const CalibInput& input, double test_weight, double level);

/// Conservative weight over a conformal interval for the test PI, then WCP
/// at level 1-alpha+beta. The interval [z_lo, z_hi] is scanned on a uniform
/// grid that includes both endpoints.
Threshold calibrate_two_staged(const CalibInput& input, double z_lo, double z_hi,
                               const WeightModel& weight_model, double alpha, double beta,
                               int grid_size = 201);

/// Quadratic-time variant: one WCP threshold per calibration sample, then
/// the (1-beta) quantile of those thresholds with an extra mass at infinity.
Threshold calibrate_pcp_naive(const CalibInput& input);

/// Linear-time variant: the (1-beta) quantile of the calibration weights
/// (plus infinity) becomes the surrogate test weight fed to one WCP call.
/// Produces exactly the same output as calibrate_pcp_naive.
Threshold calibrate_pcp_efficient(const CalibInput& input);

PredictionSet predict_set(ScoreKind kind, const ModelOutput& output, const Threshold& threshold);

/// Leave-one-out inputs at one test point: per training sample, the held-out
/// model's band evaluated at x, the held-out score, the weight, and the
/// corruption bit. Bands and scores are read only for clean samples.
struct LooInput {
  std::vector<double> band_lo, band_hi;
  std::vector<double> scores;
  std::vector<double> weights;
  std::vector<int> m_bits;
  double alpha = 0.1;
  double beta = 0.005;
};

/// Membership rule of the leave-one-out calibrator, solved in closed form:
/// sweep the breakpoints of sum_i p_i 1{S_i < S(x, y; f^{-i})} and return
/// the hull of {y : sum < 1-gamma}, gamma = alpha - beta/2. An infinite
/// surrogate weight or an empty clean set yields FullSpace.
PredictionSet loo_pcp_predict(const LooInput& input);

}  // namespace privcal
