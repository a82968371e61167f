#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "privcal/core.hpp"

namespace privcal {

enum class Conditioning { ZOnly, XAndZ };

/// Source of likelihood-ratio weights w = P(M=0) / P(M=0 | conditioning).
/// Estimated models clamp the conditional into [p_floor, 1]; oracle models
/// return exact probabilities and report WeightUndefined at <= 0.
struct WeightModel {
  double marginal_clean = 1.0;
  Conditioning conditioning = Conditioning::ZOnly;
  bool oracle = false;
  double p_floor = 1e-3;
  std::function<double(const std::vector<double>&)> conditional_raw;

  double conditional(const std::vector<double>& v) const;
};

double likelihood_ratio(const WeightModel& model, const std::vector<double>& z_or_xz);

/// Empirical clean fraction (1/n) sum(1 - m_i).
double estimate_marginal_clean_rate(const std::vector<int>& m_bits);

struct LogisticConfig {
  double lr = 0.5;
  int epochs = 400;
  double p_floor = 1e-3;
};

/// Negative log-likelihood of the logistic model P(M=1|v) = sigmoid(w.v + b)
/// on standardized-or-not features, with theta = [w..., b]. Exposed so the
/// gradient can be checked against finite differences.
double logistic_nll(const std::vector<double>& theta, const Rows& feats,
                    const std::vector<int>& m_bits);
std::vector<double> logistic_nll_grad(const std::vector<double>& theta, const Rows& feats,
                                      const std::vector<int>& m_bits);

/// Logistic regression of the corruption bit on the given features (Z, or
/// X concatenated with Z). All-identical labels yield a constant model at
/// the marginal rate.
WeightModel fit_corruption_classifier(const Rows& feats, const std::vector<int>& m_bits,
                                      const LogisticConfig& cfg,
                                      Conditioning cond = Conditioning::ZOnly);

}  // namespace privcal
