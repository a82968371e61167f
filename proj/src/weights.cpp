#include "privcal/weights.hpp"

#include <algorithm>
#include <cmath>

#include "privcal/errors.hpp"

namespace privcal {

double WeightModel::conditional(const std::vector<double>& v) const {
  const double raw = conditional_raw(v);
  if (oracle) {
    if (!(raw > 0.0)) {
      throw WeightUndefined("oracle conditional clean probability is not positive");
    }
    return std::min(raw, 1.0);
  }
  return std::clamp(raw, p_floor, 1.0);
}

double likelihood_ratio(const WeightModel& model, const std::vector<double>& z_or_xz) {
  return model.marginal_clean / model.conditional(z_or_xz);
}

double estimate_marginal_clean_rate(const std::vector<int>& m_bits) {
  if (m_bits.empty()) throw EmptyInput("estimate_marginal_clean_rate: empty input");
  double clean = 0.0;
  for (int m : m_bits) clean += 1.0 - static_cast<double>(m);
  return clean / static_cast<double>(m_bits.size());
}

namespace {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double dot_theta(const std::vector<double>& theta, const std::vector<double>& x) {
  double s = theta.back();  // bias
  for (std::size_t j = 0; j < x.size(); ++j) s += theta[j] * x[j];
  return s;
}

}  // namespace

double logistic_nll(const std::vector<double>& theta, const Rows& feats,
                    const std::vector<int>& m_bits) {
  const double n = static_cast<double>(feats.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const double t = dot_theta(theta, feats[i]);
    // log(1 + exp(t)) - m*t, written in the overflow-safe form
    const double softplus = t > 30.0 ? t : std::log1p(std::exp(t));
    loss += softplus - static_cast<double>(m_bits[i]) * t;
  }
  return loss / n;
}

std::vector<double> logistic_nll_grad(const std::vector<double>& theta, const Rows& feats,
                                      const std::vector<int>& m_bits) {
  const double n = static_cast<double>(feats.size());
  std::vector<double> grad(theta.size(), 0.0);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const double r = sigmoid(dot_theta(theta, feats[i])) - static_cast<double>(m_bits[i]);
    for (std::size_t j = 0; j < feats[i].size(); ++j) grad[j] += r * feats[i][j];
    grad.back() += r;
  }
  for (double& g : grad) g /= n;
  return grad;
}

WeightModel fit_corruption_classifier(const Rows& feats, const std::vector<int>& m_bits,
                                      const LogisticConfig& cfg, Conditioning cond) {
  if (feats.empty() || feats.size() != m_bits.size()) {
    throw LengthMismatch("fit_corruption_classifier: features vs labels");
  }
  const double marginal = estimate_marginal_clean_rate(m_bits);

  WeightModel model;
  model.marginal_clean = marginal;
  model.conditioning = cond;
  model.oracle = false;
  model.p_floor = cfg.p_floor;

  const bool all_same = std::all_of(m_bits.begin(), m_bits.end(),
                                    [&](int m) { return m == m_bits.front(); });
  if (all_same) {
    model.conditional_raw = [marginal](const std::vector<double>&) { return marginal; };
    return model;
  }

  const std::size_t d = feats.front().size();

  // Standardize for stable gradient descent; fold the transform into the
  // stored closure afterwards.
  std::vector<double> mean(d, 0.0), stdev(d, 0.0);
  for (const auto& row : feats)
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
  for (double& v : mean) v /= static_cast<double>(feats.size());
  for (const auto& row : feats)
    for (std::size_t j = 0; j < d; ++j) stdev[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
  for (double& v : stdev) v = std::sqrt(v / static_cast<double>(feats.size()));
  for (double& v : stdev)
    if (v < 1e-12) v = 1.0;

  Rows std_feats(feats.size(), std::vector<double>(d));
  for (std::size_t i = 0; i < feats.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) std_feats[i][j] = (feats[i][j] - mean[j]) / stdev[j];

  std::vector<double> theta(d + 1, 0.0);
  theta.back() = std::log((1.0 - marginal) / std::max(marginal, 1e-12));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto grad = logistic_nll_grad(theta, std_feats, m_bits);
    const double lr = cfg.lr / (1.0 + static_cast<double>(epoch) / 100.0);
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= lr * grad[j];
  }

  model.conditional_raw = [theta, mean, stdev, d](const std::vector<double>& v) {
    double t = theta[d];
    for (std::size_t j = 0; j < d; ++j) t += theta[j] * (v[j] - mean[j]) / stdev[j];
    return 1.0 - sigmoid(t);  // P(M=0 | v)
  };
  return model;
}

}  // namespace privcal
