#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "privcal/core.hpp"

namespace privcal {

struct FitConfig {
  double lr = 0.1;
  int epochs = 800;
  int patience = 100;
  double lr_decay = 200.0;  // lr_t = lr / (1 + t/lr_decay)
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// tau*(y-pred) above the prediction, (1-tau)*(pred-y) below.
double pinball_loss(double pred, double y, double tau);

/// Mean pinball loss of the linear head theta = [w..., b] and its gradient;
/// exposed for the finite-difference checks.
double pinball_objective(const std::vector<double>& theta, const Rows& X,
                         const std::vector<double>& y, double tau);
std::vector<double> pinball_objective_grad(const std::vector<double>& theta, const Rows& X,
                                           const std::vector<double>& y, double tau);

/// Linear conditional-quantile model: one weight vector + bias per tau,
/// trained on standardized data. predict_band swaps crossed quantiles.
struct QuantileModel {
  std::vector<double> taus;
  std::vector<double> x_mean, x_std;
  double y_mean = 0.0, y_std = 1.0;
  Rows w;                  // per tau
  std::vector<double> b;   // per tau

  double predict_tau(const std::vector<double>& x, std::size_t tau_idx) const;
  std::pair<double, double> predict_band(const std::vector<double>& x) const;
};

/// Gradient descent on mean pinball loss with early stopping on a validation
/// split (supplied, or carved from the training rows when absent).
QuantileModel fit_quantile_regressor(const Rows& X, const std::vector<double>& y,
                                     const std::vector<double>& taus, const FitConfig& cfg,
                                     const Rows& X_val = {},
                                     const std::vector<double>& y_val = {});

/// Linear softmax classifier; outputs are a probability simplex.
struct ClassifierModel {
  int num_classes = 0;
  std::vector<double> x_mean, x_std;
  Rows w;                  // per class
  std::vector<double> b;   // per class

  std::vector<double> predict_proba(const std::vector<double>& x) const;
};

/// Mean cross-entropy of the flattened parameters [W (k x d), b (k)] and its
/// gradient; exposed for the finite-difference checks.
double cross_entropy_objective(const std::vector<double>& theta, const Rows& X,
                               const std::vector<int>& labels, int num_classes);
std::vector<double> cross_entropy_objective_grad(const std::vector<double>& theta, const Rows& X,
                                                 const std::vector<int>& labels, int num_classes);

ClassifierModel fit_softmax_classifier(const Rows& X, const std::vector<int>& labels,
                                       int num_classes, const FitConfig& cfg);

/// n quantile models, the i-th fitted without sample i.
struct LooModelBank {
  std::vector<QuantileModel> models;
};

LooModelBank fit_loo_bank(const Rows& X, const std::vector<double>& y,
                          const std::vector<double>& taus, const FitConfig& cfg,
                          int cap = 500, int n_threads = 1, const Rows& X_val = {},
                          const std::vector<double>& y_val = {});

/// Per-column least squares on the always-observed columns of the fit table.
/// Rows with no missing cells pass through untouched.
struct LinearImputer {
  struct ColumnModel {
    std::size_t col = 0;
    std::vector<double> coef;  // over observed_cols
    double intercept = 0.0;
  };
  std::vector<std::size_t> observed_cols;
  std::vector<ColumnModel> column_models;
  std::vector<double> column_means;  // over the fit table's observed cells

  std::vector<double> impute_row(std::vector<double> row) const;
  Rows impute(const Rows& rows) const;
};

LinearImputer fit_linear_imputer(const Rows& table);

}  // namespace privcal
