#include "privcal/models.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "privcal/errors.hpp"
#include "privcal/threading.hpp"

namespace privcal {

double pinball_loss(double pred, double y, double tau) {
  if (!(tau > 0.0) || !(tau < 1.0)) throw BadTau("pinball_loss: tau must be in (0,1)");
  const double diff = y - pred;
  return diff >= 0.0 ? tau * diff : (tau - 1.0) * diff;
}

namespace {

double linear_eval(const std::vector<double>& theta, const std::vector<double>& x) {
  double s = theta.back();
  for (std::size_t j = 0; j < x.size(); ++j) s += theta[j] * x[j];
  return s;
}

struct Standardizer {
  std::vector<double> mean, stdev;

  static Standardizer fit(const Rows& X) {
    const std::size_t d = X.empty() ? 0 : X.front().size();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.stdev.assign(d, 0.0);
    for (const auto& row : X)
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
    for (double& v : s.mean) v /= static_cast<double>(X.size());
    for (const auto& row : X)
      for (std::size_t j = 0; j < d; ++j) {
        const double c = row[j] - s.mean[j];
        s.stdev[j] += c * c;
      }
    for (double& v : s.stdev) {
      v = std::sqrt(v / static_cast<double>(X.size()));
      if (v < 1e-12) v = 1.0;
    }
    return s;
  }

  Rows apply(const Rows& X) const {
    Rows out(X.size(), std::vector<double>(mean.size()));
    for (std::size_t i = 0; i < X.size(); ++i)
      for (std::size_t j = 0; j < mean.size(); ++j)
        out[i][j] = (X[i][j] - mean[j]) / stdev[j];
    return out;
  }
};

double quantile_of_sorted(const std::vector<double>& sorted, double tau) {
  const double pos = tau * static_cast<double>(sorted.size() - 1);
  const std::size_t k = static_cast<std::size_t>(pos);
  return sorted[std::min(k, sorted.size() - 1)];
}

}  // namespace

double pinball_objective(const std::vector<double>& theta, const Rows& X,
                         const std::vector<double>& y, double tau) {
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    loss += pinball_loss(linear_eval(theta, X[i]), y[i], tau);
  }
  return loss / static_cast<double>(X.size());
}

std::vector<double> pinball_objective_grad(const std::vector<double>& theta, const Rows& X,
                                           const std::vector<double>& y, double tau) {
  std::vector<double> grad(theta.size(), 0.0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double pred = linear_eval(theta, X[i]);
    // d/dpred of the pinball loss: -tau above the prediction, 1-tau below.
    const double g = y[i] >= pred ? -tau : (1.0 - tau);
    for (std::size_t j = 0; j < X[i].size(); ++j) grad[j] += g * X[i][j];
    grad.back() += g;
  }
  for (double& v : grad) v /= static_cast<double>(X.size());
  return grad;
}

double QuantileModel::predict_tau(const std::vector<double>& x, std::size_t tau_idx) const {
  double s = b[tau_idx];
  for (std::size_t j = 0; j < x.size(); ++j) s += w[tau_idx][j] * (x[j] - x_mean[j]) / x_std[j];
  return y_mean + y_std * s;
}

std::pair<double, double> QuantileModel::predict_band(const std::vector<double>& x) const {
  double lo = predict_tau(x, 0);
  double hi = predict_tau(x, taus.size() - 1);
  if (lo > hi) std::swap(lo, hi);
  return {lo, hi};
}

QuantileModel fit_quantile_regressor(const Rows& X, const std::vector<double>& y,
                                     const std::vector<double>& taus, const FitConfig& cfg,
                                     const Rows& X_val_in, const std::vector<double>& y_val_in) {
  if (X.size() < 2 || X.size() != y.size()) {
    throw LengthMismatch("fit_quantile_regressor: need >= 2 aligned samples");
  }
  for (double t : taus)
    if (!(t > 0.0) || !(t < 1.0)) throw BadTau("fit_quantile_regressor: tau out of range");

  QuantileModel model;
  model.taus = taus;
  const Standardizer sx = Standardizer::fit(X);
  model.x_mean = sx.mean;
  model.x_std = sx.stdev;

  const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double y_var = 0.0;
  for (double v : y) y_var += (v - y_mean) * (v - y_mean);
  y_var /= static_cast<double>(y.size());
  model.y_mean = y_mean;
  model.y_std = std::sqrt(y_var);

  const std::size_t d = X.front().size();
  if (model.y_std < 1e-12) {
    // Degenerate target: constant model.
    model.y_std = 1.0;
    model.w.assign(taus.size(), std::vector<double>(d, 0.0));
    model.b.assign(taus.size(), 0.0);
    return model;
  }

  Rows X_std = sx.apply(X);
  std::vector<double> y_std(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) y_std[i] = (y[i] - y_mean) / model.y_std;

  Rows Xv_std;
  std::vector<double> yv_std;
  Rows X_fit;
  std::vector<double> y_fit;
  if (!X_val_in.empty()) {
    Xv_std = sx.apply(X_val_in);
    yv_std.resize(y_val_in.size());
    for (std::size_t i = 0; i < y_val_in.size(); ++i)
      yv_std[i] = (y_val_in[i] - y_mean) / model.y_std;
    X_fit = std::move(X_std);
    y_fit = std::move(y_std);
  } else {
    // Carve an internal validation split.
    std::vector<std::size_t> order(X.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(X.size()));
    n_val = std::min(n_val, X.size() - 1);
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k < n_val) {
        Xv_std.push_back(X_std[order[k]]);
        yv_std.push_back(y_std[order[k]]);
      } else {
        X_fit.push_back(X_std[order[k]]);
        y_fit.push_back(y_std[order[k]]);
      }
    }
    if (Xv_std.empty()) {
      Xv_std = X_fit;
      yv_std = y_fit;
    }
  }

  std::vector<double> y_sorted = y_fit;
  std::sort(y_sorted.begin(), y_sorted.end());

  model.w.assign(taus.size(), std::vector<double>(d, 0.0));
  model.b.assign(taus.size(), 0.0);

  for (std::size_t t = 0; t < taus.size(); ++t) {
    std::vector<double> theta(d + 1, 0.0);
    theta.back() = quantile_of_sorted(y_sorted, taus[t]);
    std::vector<double> best = theta;
    double best_val = pinball_objective(theta, Xv_std, yv_std, taus[t]);
    int stall = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      const auto grad = pinball_objective_grad(theta, X_fit, y_fit, taus[t]);
      const double lr = cfg.lr / (1.0 + static_cast<double>(epoch) / cfg.lr_decay);
      for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= lr * grad[j];
      const double val = pinball_objective(theta, Xv_std, yv_std, taus[t]);
      if (val < best_val - 1e-10) {
        best_val = val;
        best = theta;
        stall = 0;
      } else if (++stall >= cfg.patience) {
        break;
      }
    }
    for (std::size_t j = 0; j < d; ++j) model.w[t][j] = best[j];
    model.b[t] = best.back();
  }
  return model;
}

std::vector<double> ClassifierModel::predict_proba(const std::vector<double>& x) const {
  const std::size_t k = w.size();
  std::vector<double> logits(k);
  for (std::size_t c = 0; c < k; ++c) {
    double s = b[c];
    for (std::size_t j = 0; j < x.size(); ++j) s += w[c][j] * (x[j] - x_mean[j]) / x_std[j];
    logits[c] = s;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : logits) v /= z;
  return logits;
}

namespace {

std::vector<double> softmax_row(const std::vector<double>& theta, const std::vector<double>& x,
                                int k, std::size_t d) {
  std::vector<double> logits(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    double s = theta[static_cast<std::size_t>(k) * d + static_cast<std::size_t>(c)];
    const std::size_t off = static_cast<std::size_t>(c) * d;
    for (std::size_t j = 0; j < d; ++j) s += theta[off + j] * x[j];
    logits[static_cast<std::size_t>(c)] = s;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : logits) v /= z;
  return logits;
}

}  // namespace

double cross_entropy_objective(const std::vector<double>& theta, const Rows& X,
                               const std::vector<int>& labels, int num_classes) {
  const std::size_t d = X.front().size();
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto p = softmax_row(theta, X[i], num_classes, d);
    loss -= std::log(std::max(p[static_cast<std::size_t>(labels[i])], 1e-300));
  }
  return loss / static_cast<double>(X.size());
}

std::vector<double> cross_entropy_objective_grad(const std::vector<double>& theta, const Rows& X,
                                                 const std::vector<int>& labels, int num_classes) {
  const std::size_t d = X.front().size();
  const std::size_t k = static_cast<std::size_t>(num_classes);
  std::vector<double> grad(theta.size(), 0.0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto p = softmax_row(theta, X[i], num_classes, d);
    for (std::size_t c = 0; c < k; ++c) {
      const double r = p[c] - (static_cast<int>(c) == labels[i] ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d; ++j) grad[c * d + j] += r * X[i][j];
      grad[k * d + c] += r;
    }
  }
  for (double& g : grad) g /= static_cast<double>(X.size());
  return grad;
}

ClassifierModel fit_softmax_classifier(const Rows& X, const std::vector<int>& labels,
                                       int num_classes, const FitConfig& cfg) {
  if (X.size() < 2 || X.size() != labels.size()) {
    throw LengthMismatch("fit_softmax_classifier: need >= 2 aligned samples");
  }
  if (num_classes < 2) throw Error("fit_softmax_classifier: need >= 2 classes");
  for (int c : labels)
    if (c < 0 || c >= num_classes) throw BadClassIndex("fit_softmax_classifier: label out of range");

  const Standardizer sx = Standardizer::fit(X);
  const Rows X_std = sx.apply(X);
  const std::size_t d = X.front().size();
  const std::size_t k = static_cast<std::size_t>(num_classes);

  std::vector<double> theta(k * d + k, 0.0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto grad = cross_entropy_objective_grad(theta, X_std, labels, num_classes);
    const double lr = cfg.lr / (1.0 + static_cast<double>(epoch) / cfg.lr_decay);
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= lr * grad[j];
  }

  ClassifierModel model;
  model.num_classes = num_classes;
  model.x_mean = sx.mean;
  model.x_std = sx.stdev;
  model.w.assign(k, std::vector<double>(d));
  model.b.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t j = 0; j < d; ++j) model.w[c][j] = theta[c * d + j];
    model.b[c] = theta[k * d + c];
  }
  return model;
}

LooModelBank fit_loo_bank(const Rows& X, const std::vector<double>& y,
                          const std::vector<double>& taus, const FitConfig& cfg, int cap,
                          int n_threads, const Rows& X_val, const std::vector<double>& y_val) {
  const std::size_t n = X.size();
  if (n > static_cast<std::size_t>(cap)) throw CapExceeded("fit_loo_bank: n exceeds the LOO cap");
  if (n < 3 || y.size() != n) throw LengthMismatch("fit_loo_bank: need >= 3 aligned samples");

  LooModelBank bank;
  bank.models.resize(n);
  parallel_for(n, n_threads, [&](std::size_t i) {
    Rows Xi;
    std::vector<double> yi;
    Xi.reserve(n - 1);
    yi.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      Xi.push_back(X[j]);
      yi.push_back(y[j]);
    }
    FitConfig sub = cfg;
    sub.seed = cfg.seed * 0x9e3779b97f4a7c15ULL + i + 1;
    bank.models[i] = fit_quantile_regressor(Xi, yi, taus, sub, X_val, y_val);
  });
  return bank;
}

std::vector<double> LinearImputer::impute_row(std::vector<double> row) const {
  bool any_missing = false;
  for (double v : row)
    if (is_missing(v)) {
      any_missing = true;
      break;
    }
  if (!any_missing) return row;

  std::vector<double> out = row;
  for (const auto& cm : column_models) {
    if (!is_missing(row[cm.col])) continue;
    double pred = cm.intercept;
    for (std::size_t j = 0; j < observed_cols.size(); ++j) {
      pred += cm.coef[j] * row[observed_cols[j]];
    }
    out[cm.col] = pred;
  }
  // A missing cell in a column that was fully observed at fit time falls
  // back to that column's mean.
  for (std::size_t c = 0; c < out.size(); ++c) {
    if (is_missing(out[c])) out[c] = column_means[c];
  }
  return out;
}

Rows LinearImputer::impute(const Rows& rows) const {
  Rows out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(impute_row(r));
  return out;
}

LinearImputer fit_linear_imputer(const Rows& table) {
  if (table.empty()) throw EmptyInput("fit_linear_imputer: empty table");
  const std::size_t d = table.front().size();

  std::vector<bool> has_missing(d, false);
  for (const auto& row : table) {
    if (row.size() != d) throw LengthMismatch("fit_linear_imputer: ragged table");
    for (std::size_t c = 0; c < d; ++c)
      if (is_missing(row[c])) has_missing[c] = true;
  }

  LinearImputer imp;
  for (std::size_t c = 0; c < d; ++c)
    if (!has_missing[c]) imp.observed_cols.push_back(c);
  if (imp.observed_cols.empty()) throw NoObservedColumns("fit_linear_imputer: no observed columns");

  imp.column_means.assign(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : table) {
      if (!is_missing(row[c])) {
        sum += row[c];
        ++count;
      }
    }
    imp.column_means[c] = count > 0 ? sum / static_cast<double>(count) : 0.0;
  }

  const std::size_t p = imp.observed_cols.size();
  for (std::size_t c = 0; c < d; ++c) {
    if (!has_missing[c]) continue;
    std::vector<std::size_t> rows_with_target;
    for (std::size_t i = 0; i < table.size(); ++i)
      if (!is_missing(table[i][c])) rows_with_target.push_back(i);
    if (rows_with_target.empty()) {
      throw DegenerateData("fit_linear_imputer: a column is entirely missing");
    }

    Eigen::MatrixXd A(rows_with_target.size(), p + 1);
    Eigen::VectorXd b(rows_with_target.size());
    for (std::size_t r = 0; r < rows_with_target.size(); ++r) {
      const auto& row = table[rows_with_target[r]];
      for (std::size_t j = 0; j < p; ++j) A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = row[imp.observed_cols[j]];
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p)) = 1.0;
      b(static_cast<Eigen::Index>(r)) = row[c];
    }
    const Eigen::VectorXd sol = A.colPivHouseholderQr().solve(b);

    LinearImputer::ColumnModel cm;
    cm.col = c;
    cm.coef.resize(p);
    for (std::size_t j = 0; j < p; ++j) cm.coef[j] = sol(static_cast<Eigen::Index>(j));
    cm.intercept = sol(static_cast<Eigen::Index>(p));
    imp.column_models.push_back(std::move(cm));
  }
  return imp;
}

}  // namespace privcal
