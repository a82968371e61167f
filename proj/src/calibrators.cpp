#include "privcal/calibrators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "privcal/errors.hpp"

namespace privcal {

namespace {

void check_alpha_beta(double alpha, double beta) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw BadLevel("alpha must be in (0,1)");
  if (!(beta > 0.0) || !(beta < alpha)) throw BadBeta("beta must be in (0, alpha)");
}

WeightedDistribution clean_score_atoms(const CalibInput& input, double inf_mass) {
  WeightedDistribution dist;
  for (const auto& e : input.entries) {
    if (e.m == 0) dist.atoms.push_back({e.score, e.weight});
  }
  dist.inf_mass = inf_mass;
  return dist;
}

}  // namespace

Threshold calibrate_naive(const CalibInput& input, bool use_corrupted) {
  std::vector<double> scores;
  for (const auto& e : input.entries) {
    if (use_corrupted || e.m == 0) scores.push_back(e.score);
  }
  if (scores.empty()) return Threshold::infinite();
  return cp_quantile(scores, input.alpha);
}

Threshold calibrate_wcp(const CalibInput& input, double test_weight, double level) {
  if (!(test_weight > 0.0)) throw Error("calibrate_wcp: test weight must be positive");
  WeightedDistribution dist = clean_score_atoms(input, test_weight);
  if (dist.atoms.empty()) return Threshold::infinite();
  return weighted_quantile(level, dist);
}

Threshold calibrate_two_staged(const CalibInput& input, double z_lo, double z_hi,
                               const WeightModel& weight_model, double alpha, double beta,
                               int grid_size) {
  check_alpha_beta(alpha, beta);
  if (z_lo > z_hi) throw InvalidBand("calibrate_two_staged: z_lo > z_hi");
  if (grid_size < 2 && z_lo != z_hi) throw Error("calibrate_two_staged: grid too small");

  double w_cons = 0.0;
  if (z_lo == z_hi) {
    w_cons = likelihood_ratio(weight_model, {z_lo});
  } else {
    const double step = (z_hi - z_lo) / static_cast<double>(grid_size - 1);
    for (int g = 0; g < grid_size; ++g) {
      const double z = g + 1 == grid_size ? z_hi : z_lo + step * static_cast<double>(g);
      w_cons = std::max(w_cons, likelihood_ratio(weight_model, {z}));
    }
  }
  return calibrate_wcp(input, w_cons, 1.0 - alpha + beta);
}

Threshold calibrate_pcp_naive(const CalibInput& input) {
  check_alpha_beta(input.alpha, input.beta);
  const double level_inner = 1.0 - input.alpha + input.beta;

  bool any_clean = false;
  for (const auto& e : input.entries) any_clean = any_clean || e.m == 0;
  if (!any_clean) return Threshold::infinite();

  // One WCP threshold per calibration sample, its own weight as the mass at
  // infinity; the finite-score atoms stay fixed to the clean entries.
  std::vector<Threshold> per_sample;
  per_sample.reserve(input.entries.size());
  for (const auto& e : input.entries) {
    if (!(e.weight > 0.0)) throw Error("calibrate_pcp_naive: weights must be positive");
    per_sample.push_back(
        weighted_quantile(level_inner, clean_score_atoms(input, e.weight)));
  }

  // Infinite per-sample thresholds sit above every finite one, so they pool
  // with the extra mass at infinity.
  WeightedDistribution outer;
  outer.inf_mass = 1.0;
  for (const auto& t : per_sample) {
    if (t.inf) {
      outer.inf_mass += 1.0;
    } else {
      outer.atoms.push_back({t.q, 1.0});
    }
  }
  return weighted_quantile(1.0 - input.beta, outer);
}

Threshold calibrate_pcp_efficient(const CalibInput& input) {
  check_alpha_beta(input.alpha, input.beta);

  bool any_clean = false;
  WeightedDistribution weight_dist;
  weight_dist.inf_mass = 1.0;
  for (const auto& e : input.entries) {
    if (!(e.weight > 0.0)) throw Error("calibrate_pcp_efficient: weights must be positive");
    weight_dist.atoms.push_back({e.weight, 1.0});
    any_clean = any_clean || e.m == 0;
  }
  if (!any_clean) return Threshold::infinite();

  const Threshold surrogate = weighted_quantile(1.0 - input.beta, weight_dist);
  if (surrogate.inf) return Threshold::infinite();
  return calibrate_wcp(input, surrogate.q, 1.0 - input.alpha + input.beta);
}

PredictionSet predict_set(ScoreKind kind, const ModelOutput& output, const Threshold& threshold) {
  return invert(kind, output, threshold);
}

PredictionSet loo_pcp_predict(const LooInput& input) {
  const std::size_t n = input.weights.size();
  if (n == 0 || input.m_bits.size() != n || input.scores.size() != n ||
      input.band_lo.size() != n || input.band_hi.size() != n) {
    throw LengthMismatch("loo_pcp_predict: misaligned inputs");
  }
  const double gamma = input.alpha - input.beta / 2.0;
  if (!(gamma > 0.0) || !(gamma < 1.0)) throw BadBeta("loo_pcp_predict: gamma out of (0,1)");

  std::vector<std::size_t> clean;
  for (std::size_t i = 0; i < n; ++i)
    if (input.m_bits[i] == 0) clean.push_back(i);
  if (clean.empty()) return PredictionSet::full_space();

  WeightedDistribution weight_dist;
  weight_dist.inf_mass = 1.0;
  for (double w : input.weights) {
    if (!(w > 0.0)) throw Error("loo_pcp_predict: weights must be positive");
    weight_dist.atoms.push_back({w, 1.0});
  }
  const Threshold surrogate = weighted_quantile(1.0 - input.beta, weight_dist);
  if (surrogate.inf) return PredictionSet::full_space();

  double denom = surrogate.q;
  for (std::size_t i : clean) denom += input.weights[i];
  const double p_test = surrogate.q / denom;

  // Sample i rejects y outside [band_lo - S_i, band_hi + S_i]; the rejected
  // mass at y = sum of p_i over rejecting i. Membership: mass < 1 - gamma.
  // At y -> +-inf the mass is 1 - p_test, so everything is a member as soon
  // as p_test > gamma.
  if (1.0 - p_test < 1.0 - gamma) return PredictionSet::full_space();

  std::vector<double> lo(clean.size()), hi(clean.size()), p(clean.size());
  for (std::size_t k = 0; k < clean.size(); ++k) {
    const std::size_t i = clean[k];
    lo[k] = input.band_lo[i] - input.scores[i];
    hi[k] = input.band_hi[i] + input.scores[i];
    p[k] = input.weights[i] / denom;
  }

  // Candidate endpoints are breakpoints of the rejected-mass step function:
  // it can drop only at some lo_k and rise only just past some hi_k. The
  // sweep is O(n^2); n is LOO-capped.
  auto rejected_mass = [&](double y) {
    double mass = 0.0;
    for (std::size_t k = 0; k < clean.size(); ++k) {
      if (y < lo[k] || y > hi[k]) mass += p[k];
    }
    return mass;
  };

  bool found = false;
  double best_lo = 0.0, best_hi = 0.0;
  for (std::size_t k = 0; k < clean.size(); ++k) {
    if (rejected_mass(lo[k]) < 1.0 - gamma) {
      if (!found || lo[k] < best_lo) best_lo = lo[k];
      if (!found || lo[k] > best_hi) best_hi = lo[k];
      found = true;
    }
    if (rejected_mass(hi[k]) < 1.0 - gamma) {
      if (!found || hi[k] < best_lo) best_lo = hi[k];
      if (!found || hi[k] > best_hi) best_hi = hi[k];
      found = true;
    }
  }
  if (!found) {
    // No candidate qualifies: degenerate midpoint interval, mirroring the
    // CQR empty-set handling.
    double mid_lo = *std::min_element(lo.begin(), lo.end());
    double mid_hi = *std::max_element(hi.begin(), hi.end());
    const double mid = (mid_lo + mid_hi) / 2.0;
    return PredictionSet::interval(mid, mid);
  }
  return PredictionSet::interval(best_lo, best_hi);
}

}  // namespace privcal
