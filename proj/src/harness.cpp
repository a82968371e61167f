#include "privcal/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "privcal/calibrators.hpp"
#include "privcal/errors.hpp"
#include "privcal/models.hpp"
#include "privcal/threading.hpp"
#include "privcal/weights.hpp"
#include "privcal/wquantile.hpp"

namespace privcal {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr double kTauLo = 0.05;
constexpr double kTauHi = 0.95;

}  // namespace

Method method_from_name(const std::string& name) {
  if (name == "naive_cp_all") return Method::NaiveCpAll;
  if (name == "naive_cp_clean") return Method::NaiveCpClean;
  if (name == "wcp" || name == "wcp_infeasible") return Method::Wcp;
  if (name == "two_staged") return Method::TwoStaged;
  if (name == "pcp_naive") return Method::PcpNaive;
  if (name == "pcp" || name == "pcp_efficient") return Method::PcpEfficient;
  if (name == "loo_pcp") return Method::LooPcp;
  throw ConfigError("unknown method: " + name);
}

std::string method_token(Method m) {
  switch (m) {
    case Method::NaiveCpAll: return "naive_cp_all";
    case Method::NaiveCpClean: return "naive_cp_clean";
    case Method::Wcp: return "wcp";
    case Method::TwoStaged: return "two_staged";
    case Method::PcpNaive: return "pcp_naive";
    case Method::PcpEfficient: return "pcp";
    case Method::LooPcp: return "loo_pcp";
  }
  throw ConfigError("unknown method enum");
}

std::string method_row_label(Method m, WeightSource source) {
  if (m == Method::Wcp) {
    return source == WeightSource::EstimatedFromX ? "wcp_naive_x" : "wcp_infeasible";
  }
  return method_token(m);
}

namespace {

double method_beta(Method m, const ExperimentConfig& cfg) {
  switch (m) {
    case Method::TwoStaged: return cfg.beta_two_staged;
    case Method::PcpNaive:
    case Method::PcpEfficient:
    case Method::LooPcp: return cfg.beta_pcp;
    default: return 0.0;
  }
}

struct TrialContext {
  const ExperimentConfig* cfg = nullptr;
  SynthData synth;
  Dataset corrupted;
  SplitIndices split;
  Rows x_imputed;                 // all rows, missing cells filled
  std::vector<double> y_imputed;  // all rows, missing responses filled
  QuantileModel y_model;
  double length_cap = 0.0;
  WeightModel weight_model;
  CalibInput ci_clean;    // scores NaN on corrupted entries
  CalibInput ci_imputed;  // scores from imputed responses on every entry
};

std::vector<double> weight_features(const TrialContext& ctx, std::size_t i, bool test_point) {
  // Oracle and Z-estimated weights condition on the PI; the naive X-estimated
  // variant conditions on the covariates (clean at test time).
  if (ctx.cfg->weight_source == WeightSource::EstimatedFromX) {
    return test_point ? ctx.synth.data.samples[i].x_obs : ctx.x_imputed[i];
  }
  return ctx.synth.data.samples[i].z;
}

WeightModel build_weight_model(const TrialContext& ctx, std::uint64_t seed_t) {
  const auto& cfg = *ctx.cfg;
  if (cfg.weight_source == WeightSource::Oracle) {
    WeightModel model;
    model.oracle = true;
    model.conditioning = Conditioning::ZOnly;
    double mean_prob = std::accumulate(ctx.synth.probs.begin(), ctx.synth.probs.end(), 0.0) /
                       static_cast<double>(ctx.synth.probs.size());
    model.marginal_clean = 1.0 - mean_prob;
    const CorruptionModel prob_model = ctx.synth.prob_model;
    model.conditional_raw = [prob_model](const std::vector<double>& z) {
      return 1.0 - prob_model.prob(z[0]);
    };
    return model;
  }

  Rows feats;
  std::vector<int> m_bits;
  auto add_rows = [&](const std::vector<int>& part) {
    for (int i : part) {
      const std::size_t u = static_cast<std::size_t>(i);
      feats.push_back(cfg.weight_source == WeightSource::EstimatedFromX
                          ? ctx.x_imputed[u]
                          : ctx.synth.data.samples[u].z);
      m_bits.push_back(ctx.corrupted.samples[u].m);
    }
  };
  add_rows(ctx.split.train);
  add_rows(ctx.split.valid);
  LogisticConfig lcfg;
  (void)seed_t;
  return fit_corruption_classifier(feats, m_bits, lcfg,
                                   cfg.weight_source == WeightSource::EstimatedFromX
                                       ? Conditioning::XAndZ
                                       : Conditioning::ZOnly);
}

TrialContext prepare_trial(const ExperimentConfig& cfg, int trial) {
  TrialContext ctx;
  ctx.cfg = &cfg;
  const std::uint64_t seed_t = cfg.seed + static_cast<std::uint64_t>(trial);

  SynthConfig scfg;
  scfg.n = cfg.n_samples;
  scfg.seed = mix_seed(seed_t, 0);
  scfg.target_corruption_mean = cfg.target_corruption_mean;
  scfg.mode = cfg.mode;
  ctx.synth = gen_synthetic(scfg);
  ctx.corrupted = apply_corruption(ctx.synth.data, ctx.synth.probs, cfg.mode, mix_seed(seed_t, 1));
  ctx.split = split_dataset(ctx.corrupted, cfg.fractions, mix_seed(seed_t, 2));

  const std::size_t n = ctx.corrupted.size();
  const std::size_t d = ctx.corrupted.x_dim();
  const std::size_t k = ctx.corrupted.z_dim();

  // Impute missing cells with a linear model fitted on the always-observed
  // columns of the train+valid rows. The table carries X, Z and Y together.
  Rows fit_table;
  auto table_row = [&](std::size_t i) {
    std::vector<double> row;
    row.reserve(d + k + 1);
    const auto& s = ctx.corrupted.samples[i];
    row.insert(row.end(), s.x_obs.begin(), s.x_obs.end());
    row.insert(row.end(), s.z.begin(), s.z.end());
    row.push_back(s.y_obs);
    return row;
  };
  for (int i : ctx.split.train) fit_table.push_back(table_row(static_cast<std::size_t>(i)));
  for (int i : ctx.split.valid) fit_table.push_back(table_row(static_cast<std::size_t>(i)));
  const LinearImputer imputer = fit_linear_imputer(fit_table);

  ctx.x_imputed.resize(n);
  ctx.y_imputed.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto filled = imputer.impute_row(table_row(i));
    ctx.x_imputed[i].assign(filled.begin(), filled.begin() + static_cast<std::ptrdiff_t>(d));
    ctx.y_imputed[i] = filled.back();
  }

  Rows x_train, x_valid;
  std::vector<double> y_train, y_valid;
  for (int i : ctx.split.train) {
    x_train.push_back(ctx.x_imputed[static_cast<std::size_t>(i)]);
    y_train.push_back(ctx.y_imputed[static_cast<std::size_t>(i)]);
  }
  for (int i : ctx.split.valid) {
    x_valid.push_back(ctx.x_imputed[static_cast<std::size_t>(i)]);
    y_valid.push_back(ctx.y_imputed[static_cast<std::size_t>(i)]);
  }

  if (!y_train.empty()) {
    const auto [mn, mx] = std::minmax_element(y_train.begin(), y_train.end());
    ctx.length_cap = *mx - *mn;
  }

  const bool needs_split_model =
      std::any_of(cfg.methods.begin(), cfg.methods.end(),
                  [](Method m) { return m != Method::LooPcp; });
  FitConfig fit;
  fit.lr = cfg.fit_lr;
  fit.epochs = cfg.fit_epochs;
  fit.patience = cfg.fit_patience;
  fit.seed = mix_seed(seed_t, 3);
  if (needs_split_model && !x_train.empty()) {
    ctx.y_model = fit_quantile_regressor(x_train, y_train, {kTauLo, kTauHi}, fit, x_valid, y_valid);
  }

  ctx.weight_model = build_weight_model(ctx, seed_t);

  // Calibration entries shared by every split-based method.
  ctx.ci_clean.alpha = cfg.alpha;
  ctx.ci_clean.beta = cfg.beta_pcp;
  ctx.ci_imputed.alpha = cfg.alpha;
  ctx.ci_imputed.beta = cfg.beta_pcp;
  if (!needs_split_model) return ctx;
  for (int i : ctx.split.calib) {
    const std::size_t u = static_cast<std::size_t>(i);
    const auto [lo, hi] = ctx.y_model.predict_band(ctx.x_imputed[u]);
    const double w = likelihood_ratio(ctx.weight_model, weight_features(ctx, u, false));
    const int m = ctx.corrupted.samples[u].m;
    const double s_obs =
        m == 0 ? cqr_score(lo, hi, ctx.corrupted.samples[u].y_obs) : missing_value();
    const double s_imp = cqr_score(lo, hi, ctx.y_imputed[u]);
    ctx.ci_clean.entries.push_back({s_obs, w, m});
    ctx.ci_imputed.entries.push_back({s_imp, w, m});
  }
  return ctx;
}

std::vector<PredictionSet> sets_from_threshold(const TrialContext& ctx, const Threshold& t) {
  std::vector<PredictionSet> sets;
  sets.reserve(ctx.split.test.size());
  for (int i : ctx.split.test) {
    const auto& x_test = ctx.synth.data.samples[static_cast<std::size_t>(i)].x_obs;
    const auto [lo, hi] = ctx.y_model.predict_band(x_test);
    sets.push_back(invert(ScoreKind::CQR, ModelOutput::band(lo, hi), t));
  }
  return sets;
}

std::vector<PredictionSet> run_wcp(const TrialContext& ctx) {
  std::vector<PredictionSet> sets;
  sets.reserve(ctx.split.test.size());
  for (int i : ctx.split.test) {
    const std::size_t u = static_cast<std::size_t>(i);
    const double w_test = likelihood_ratio(ctx.weight_model, weight_features(ctx, u, true));
    const Threshold t = calibrate_wcp(ctx.ci_clean, w_test, 1.0 - ctx.cfg->alpha);
    const auto& x_test = ctx.synth.data.samples[u].x_obs;
    const auto [lo, hi] = ctx.y_model.predict_band(x_test);
    sets.push_back(invert(ScoreKind::CQR, ModelOutput::band(lo, hi), t));
  }
  return sets;
}

std::vector<PredictionSet> run_two_staged(const TrialContext& ctx, std::uint64_t seed_t) {
  const auto& cfg = *ctx.cfg;
  if (ctx.corrupted.z_dim() != 1) {
    throw Error("two_staged: the conformal PI interval requires 1-D privileged information");
  }

  // Conformal interval for the PI: quantile model X -> Z calibrated on all
  // calibration rows (the PI is always clean).
  Rows x_train, x_valid;
  std::vector<double> z_train, z_valid;
  for (int i : ctx.split.train) {
    x_train.push_back(ctx.x_imputed[static_cast<std::size_t>(i)]);
    z_train.push_back(ctx.synth.data.samples[static_cast<std::size_t>(i)].z[0]);
  }
  for (int i : ctx.split.valid) {
    x_valid.push_back(ctx.x_imputed[static_cast<std::size_t>(i)]);
    z_valid.push_back(ctx.synth.data.samples[static_cast<std::size_t>(i)].z[0]);
  }
  FitConfig fit;
  fit.lr = cfg.fit_lr;
  fit.epochs = cfg.fit_epochs;
  fit.patience = cfg.fit_patience;
  fit.seed = mix_seed(seed_t, 4);
  const QuantileModel z_model =
      fit_quantile_regressor(x_train, z_train, {kTauLo, kTauHi}, fit, x_valid, z_valid);

  std::vector<double> z_scores;
  z_scores.reserve(ctx.split.calib.size());
  for (int i : ctx.split.calib) {
    const std::size_t u = static_cast<std::size_t>(i);
    const auto [lo, hi] = z_model.predict_band(ctx.x_imputed[u]);
    z_scores.push_back(cqr_score(lo, hi, ctx.synth.data.samples[u].z[0]));
  }
  const Threshold qz = cp_quantile(z_scores, cfg.beta_two_staged);

  std::vector<PredictionSet> sets;
  sets.reserve(ctx.split.test.size());
  for (int i : ctx.split.test) {
    const std::size_t u = static_cast<std::size_t>(i);
    const auto& x_test = ctx.synth.data.samples[u].x_obs;
    Threshold t = Threshold::infinite();
    if (!qz.inf) {
      const auto [zlo, zhi] = z_model.predict_band(x_test);
      const PredictionSet cz = invert(ScoreKind::CQR, ModelOutput::band(zlo, zhi), qz);
      t = calibrate_two_staged(ctx.ci_clean, cz.lo, cz.hi, ctx.weight_model, cfg.alpha,
                               cfg.beta_two_staged, cfg.grid_size);
    }
    const auto [lo, hi] = ctx.y_model.predict_band(x_test);
    sets.push_back(invert(ScoreKind::CQR, ModelOutput::band(lo, hi), t));
  }
  return sets;
}

std::vector<PredictionSet> run_loo_pcp(const TrialContext& ctx, std::uint64_t seed_t) {
  const auto& cfg = *ctx.cfg;
  // Leave-one-out pool is the training split; the validation split drives
  // early stopping of every held-out fit. Corrupted samples keep their
  // weights in the surrogate-weight quantile but contribute no score and no
  // model (a missing response cannot train or score).
  std::vector<std::size_t> train_idx;
  for (int i : ctx.split.train) train_idx.push_back(static_cast<std::size_t>(i));

  std::vector<std::size_t> clean_idx;
  for (std::size_t u : train_idx) {
    if (ctx.corrupted.samples[u].m == 0) clean_idx.push_back(u);
  }
  if (clean_idx.size() > static_cast<std::size_t>(cfg.loo_cap)) {
    throw CapExceeded("loo_pcp: clean training size exceeds the LOO cap");
  }

  Rows x_clean;
  std::vector<double> y_clean;
  for (std::size_t u : clean_idx) {
    x_clean.push_back(ctx.x_imputed[u]);
    y_clean.push_back(ctx.corrupted.samples[u].y_obs);
  }
  Rows x_valid;
  std::vector<double> y_valid;
  for (int i : ctx.split.valid) {
    const std::size_t u = static_cast<std::size_t>(i);
    if (ctx.corrupted.samples[u].m == 0) {
      x_valid.push_back(ctx.x_imputed[u]);
      y_valid.push_back(ctx.corrupted.samples[u].y_obs);
    }
  }
  FitConfig fit;
  fit.lr = cfg.fit_lr;
  fit.epochs = cfg.fit_epochs;
  fit.patience = cfg.fit_patience;
  fit.seed = mix_seed(seed_t, 5);
  const LooModelBank bank =
      fit_loo_bank(x_clean, y_clean, {kTauLo, kTauHi}, fit, cfg.loo_cap, 1, x_valid, y_valid);

  // Held-out scores for the clean samples.
  std::vector<double> loo_scores(clean_idx.size());
  for (std::size_t c = 0; c < clean_idx.size(); ++c) {
    const auto [lo, hi] = bank.models[c].predict_band(x_clean[c]);
    loo_scores[c] = cqr_score(lo, hi, y_clean[c]);
  }

  LooInput base;
  base.alpha = cfg.alpha;
  base.beta = cfg.beta_pcp;
  const std::size_t n_all = train_idx.size();
  base.band_lo.assign(n_all, missing_value());
  base.band_hi.assign(n_all, missing_value());
  base.scores.assign(n_all, missing_value());
  base.weights.resize(n_all);
  base.m_bits.resize(n_all);
  std::vector<std::size_t> clean_pos;  // position of each clean sample in train_idx order
  {
    std::size_t c = 0;
    for (std::size_t p = 0; p < n_all; ++p) {
      const std::size_t u = train_idx[p];
      base.weights[p] = likelihood_ratio(ctx.weight_model, weight_features(ctx, u, false));
      base.m_bits[p] = ctx.corrupted.samples[u].m;
      if (base.m_bits[p] == 0) {
        base.scores[p] = loo_scores[c];
        clean_pos.push_back(p);
        ++c;
      }
    }
  }

  std::vector<PredictionSet> sets;
  sets.reserve(ctx.split.test.size());
  for (int i : ctx.split.test) {
    const auto& x_test = ctx.synth.data.samples[static_cast<std::size_t>(i)].x_obs;
    LooInput input = base;
    for (std::size_t c = 0; c < clean_idx.size(); ++c) {
      const auto [lo, hi] = bank.models[c].predict_band(x_test);
      input.band_lo[clean_pos[c]] = lo;
      input.band_hi[clean_pos[c]] = hi;
    }
    sets.push_back(loo_pcp_predict(input));
  }
  return sets;
}

}  // namespace

std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg) {
  if (!(cfg.alpha > 0.0) || !(cfg.alpha < 1.0)) throw ConfigError("alpha must be in (0,1)");
  if (cfg.n_trials < 1) throw ConfigError("n_trials must be >= 1");
  if (cfg.n_samples < 10) throw ConfigError("n_samples must be >= 10");
  for (Method m : cfg.methods) {
    const double b = method_beta(m, cfg);
    if (b != 0.0 && (!(b > 0.0) || !(b < cfg.alpha))) {
      throw ConfigError("beta must be in (0, alpha) for " + method_token(m));
    }
  }

  const std::size_t per_trial = cfg.methods.size();
  std::vector<ReportRow> rows(static_cast<std::size_t>(cfg.n_trials) * per_trial);

  parallel_for(static_cast<std::size_t>(cfg.n_trials), cfg.n_threads, [&](std::size_t t) {
    const int trial = static_cast<int>(t);
    const std::uint64_t seed_t = cfg.seed + t;
    TrialContext ctx = prepare_trial(cfg, trial);

    std::vector<double> truths;
    truths.reserve(ctx.split.test.size());
    for (int i : ctx.split.test) {
      truths.push_back(ctx.synth.data.ground_truth_y[static_cast<std::size_t>(i)]);
    }

    for (std::size_t k = 0; k < per_trial; ++k) {
      const Method m = cfg.methods[k];
      std::vector<PredictionSet> sets;
      switch (m) {
        case Method::NaiveCpAll:
          sets = sets_from_threshold(ctx, calibrate_naive(ctx.ci_imputed, true));
          break;
        case Method::NaiveCpClean:
          sets = sets_from_threshold(ctx, calibrate_naive(ctx.ci_clean, false));
          break;
        case Method::Wcp:
          sets = run_wcp(ctx);
          break;
        case Method::TwoStaged:
          sets = run_two_staged(ctx, seed_t);
          break;
        case Method::PcpNaive:
          sets = sets_from_threshold(ctx, calibrate_pcp_naive(ctx.ci_clean));
          break;
        case Method::PcpEfficient:
          sets = sets_from_threshold(ctx, calibrate_pcp_efficient(ctx.ci_clean));
          break;
        case Method::LooPcp:
          sets = run_loo_pcp(ctx, seed_t);
          break;
      }
      const TrialMetrics metrics =
          evaluate(sets, truths, ctx.corrupted.task, ctx.length_cap);
      ReportRow row;
      row.trial = trial;
      row.method = method_row_label(m, cfg.weight_source);
      row.coverage = metrics.coverage;
      row.avg_size = metrics.avg_size;
      row.alpha = cfg.alpha;
      row.beta = method_beta(m, cfg);
      row.seed = cfg.seed;
      rows[t * per_trial + k] = std::move(row);
    }
  });
  return rows;
}

std::vector<ReportRow> ablate_beta(const ExperimentConfig& cfg, const std::vector<double>& betas) {
  if (betas.empty()) throw BadBeta("ablate_beta: empty beta grid");
  for (double b : betas) {
    if (!(b > 0.0) || !(b < cfg.alpha)) throw BadBeta("ablate_beta: beta must be in (0, alpha)");
  }
  std::vector<ReportRow> all;
  for (double b : betas) {
    ExperimentConfig sub = cfg;
    sub.beta_pcp = b;  // shared seed across betas
    const auto rows = run_experiment(sub);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  return all;
}

// ---------------------------------------------------------------------------
// Property suites
// ---------------------------------------------------------------------------

namespace {

/// Grid-valued masses and values keep cumulative sums exact across both
/// quantile code paths, so equality checks are deterministic.
WeightedDistribution random_grid_distribution(std::mt19937_64& rng, int max_atoms) {
  std::uniform_int_distribution<int> n_dist(0, max_atoms);
  std::uniform_int_distribution<int> value_dist(-20, 20);
  std::uniform_int_distribution<int> mass_dist(0, 20);
  WeightedDistribution dist;
  const int n = n_dist(rng);
  for (int i = 0; i < n; ++i) {
    dist.atoms.push_back({static_cast<double>(value_dist(rng)) * 0.5,
                          static_cast<double>(mass_dist(rng)) * 0.25});
  }
  dist.inf_mass = static_cast<double>(mass_dist(rng)) * 0.25;
  return dist;
}

double positive_total(const WeightedDistribution& dist) {
  double total = dist.inf_mass;
  for (const auto& a : dist.atoms) total += a.mass;
  return total;
}

}  // namespace

PropertyReport check_oracle_equivalence(int n_instances, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level_dist(1e-9, 1.0);
  PropertyReport report{"oracle equivalence", 0, 0, 0.0};
  while (report.instances < n_instances) {
    WeightedDistribution dist = random_grid_distribution(rng, 20);
    if (!(positive_total(dist) > 0.0)) continue;
    const double level = level_dist(rng);
    ++report.instances;
    if (!(weighted_quantile(level, dist) == weighted_quantile_oracle(level, dist))) {
      ++report.failures;
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

PropertyReport check_quantile_monotonicity(int n_instances, std::uint64_t seed,
                                         bool flipped_compare) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_dist(0, 20);
  std::uniform_real_distribution<double> value_dist(-10.0, 10.0);
  std::uniform_real_distribution<double> mass_dist(0.0, 5.0);
  std::uniform_real_distribution<double> omega_dist(0.0, 5.0);
  std::uniform_real_distribution<double> level_dist(1e-9, 1.0);
  PropertyReport report{"quantile monotone in the test-weight mass", 0, 0, 0.0};
  while (report.instances < n_instances) {
    WeightedDistribution dist;
    const int n = n_dist(rng);
    for (int i = 0; i < n; ++i) dist.atoms.push_back({value_dist(rng), mass_dist(rng)});
    const double omega_small = omega_dist(rng);
    const double omega_large = omega_small + omega_dist(rng);
    if (!(positive_total(dist) + omega_small > 0.0)) continue;
    const double level = level_dist(rng);
    ++report.instances;

    dist.inf_mass = omega_small;
    const Threshold q_small = weighted_quantile(level, dist);
    dist.inf_mass = omega_large;
    const Threshold q_large = weighted_quantile(level, dist);

    const bool ok = flipped_compare ? threshold_lt(q_large, q_small)
                                    : threshold_le(q_small, q_large);
    if (!ok) ++report.failures;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
}

}  // namespace

PropertyReport check_gradient_fd(int n_points, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> tau_dist(0.05, 0.95);
  PropertyReport report{"loss gradients vs finite differences", 0, 0, 0.0};

  const int n = 40, d = 3;
  for (int point = 0; point < n_points; ++point) {
    // Pinball: redraw while a residual sits close to the kink.
    Rows X(n, std::vector<double>(d));
    std::vector<double> y(n);
    std::vector<double> theta(d + 1);
    double tau = 0.5;
    for (;;) {
      for (auto& row : X)
        for (double& v : row) v = normal(rng);
      for (double& v : y) v = 2.0 * normal(rng);
      for (double& v : theta) v = normal(rng);
      tau = tau_dist(rng);
      double min_gap = 1e9;
      for (int i = 0; i < n; ++i) {
        double pred = theta[d];
        for (int j = 0; j < d; ++j) pred += theta[static_cast<std::size_t>(j)] * X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        min_gap = std::min(min_gap, std::abs(pred - y[static_cast<std::size_t>(i)]));
      }
      if (min_gap > 1e-3) break;
    }
    const auto grad = pinball_objective_grad(theta, X, y, tau);
    std::vector<double> fd(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
      auto plus = theta, minus = theta;
      plus[j] += h;
      minus[j] -= h;
      fd[j] = (pinball_objective(plus, X, y, tau) - pinball_objective(minus, X, y, tau)) / (2 * h);
    }
    ++report.instances;
    if (relative_error(grad, fd) >= 1e-4) ++report.failures;
  }

  const int k = 3;
  std::uniform_int_distribution<int> label_dist(0, k - 1);
  for (int point = 0; point < n_points; ++point) {
    Rows X(n, std::vector<double>(d));
    std::vector<int> labels(n);
    std::vector<double> theta(static_cast<std::size_t>(k) * d + k);
    for (auto& row : X)
      for (double& v : row) v = normal(rng);
    for (int& c : labels) c = label_dist(rng);
    for (double& v : theta) v = normal(rng);

    const auto grad = cross_entropy_objective_grad(theta, X, labels, k);
    std::vector<double> fd(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
      auto plus = theta, minus = theta;
      plus[j] += h;
      minus[j] -= h;
      fd[j] = (cross_entropy_objective(plus, X, labels, k) -
               cross_entropy_objective(minus, X, labels, k)) /
              (2 * h);
    }
    ++report.instances;
    if (relative_error(grad, fd) >= 1e-4) ++report.failures;
  }

  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

PropertyReport check_uniform_reduction(int n_instances, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_dist(1, 50);
  std::normal_distribution<double> score_dist(0.0, 2.0);
  std::uniform_real_distribution<double> alpha_dist(0.01, 0.99);
  std::uniform_real_distribution<double> w_dist(0.1, 5.0);
  PropertyReport report{"uniform-weight reduction", 0, 0, 0.0};
  for (int inst = 0; inst < n_instances; ++inst) {
    const int n = n_dist(rng);
    const double alpha = alpha_dist(rng);
    const double w = w_dist(rng);
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (double& s : scores) s = score_dist(rng);

    const Threshold expected = cp_quantile(scores, alpha);

    CalibInput ci;
    ci.alpha = alpha;
    ci.beta = alpha / 2.0;
    for (double s : scores) ci.entries.push_back({s, w, 0});
    // The infinity atom at the shared weight supplies the (1+1/n) inflation,
    // so the construction-matching WCP level is 1-alpha.
    const Threshold via_wcp = calibrate_wcp(ci, w, 1.0 - alpha);

    bool ok = via_wcp == expected;

    // Same reduction phrased without the infinity atom: the quantile of the
    // n scores at level (1+1/n)(1-alpha), whenever that level is a valid one.
    const double inflated =
        (1.0 + 1.0 / static_cast<double>(n)) * (1.0 - alpha);
    if (inflated <= 1.0) {
      WeightedDistribution atoms_only;
      for (double s : scores) atoms_only.atoms.push_back({s, w});
      ok = ok && (weighted_quantile(inflated, atoms_only) == expected);
    } else {
      ok = ok && expected.inf;
    }

    ++report.instances;
    if (!ok) ++report.failures;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

bool selfcheck(std::ostream& out, SelfcheckFault fault) {
  const std::vector<PropertyReport> reports = {
      check_oracle_equivalence(1000, 11),
      check_quantile_monotonicity(1000, 12, fault == SelfcheckFault::FlipQuantileCompare),
      check_gradient_fd(50, 13),
      check_uniform_reduction(200, 14),
  };
  bool all_ok = true;
  for (const auto& r : reports) {
    char line[160];
    std::snprintf(line, sizeof(line), "[%s] %s: %d instances, %d failures (%.2fs)",
                  r.ok() ? "PASS" : "FAIL", r.name.c_str(), r.instances, r.failures, r.seconds);
    out << line << "\n";
    all_ok = all_ok && r.ok();
  }
  return all_ok;
}

// ---------------------------------------------------------------------------
// Config and CSV plumbing
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

CorruptionMode mode_from_name(const std::string& name) {
  if (name == "missing_response") return CorruptionMode::MissingResponse;
  if (name == "dispersive_noise") return CorruptionMode::DispersiveNoise;
  if (name == "contractive_noise") return CorruptionMode::ContractiveNoise;
  if (name == "missing_features") return CorruptionMode::MissingFeatures;
  throw ConfigError("unknown mode: " + name);
}

WeightSource source_from_name(const std::string& name) {
  if (name == "oracle") return WeightSource::Oracle;
  if (name == "estimated_z") return WeightSource::EstimatedFromZ;
  if (name == "estimated_x") return WeightSource::EstimatedFromX;
  throw ConfigError("unknown weight_source: " + name);
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": " + v);
  }
}

long long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": " + v);
  }
}

}  // namespace

void apply_config_override(ExperimentConfig& cfg, const std::string& key,
                           const std::string& value) {
  if (key == "mode") {
    cfg.mode = mode_from_name(value);
  } else if (key == "methods") {
    cfg.methods.clear();
    std::stringstream ss(value);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (!tok.empty()) cfg.methods.push_back(method_from_name(tok));
    }
    if (cfg.methods.empty()) throw ConfigError("methods: empty list");
  } else if (key == "alpha") {
    cfg.alpha = parse_double(value, key);
  } else if (key == "beta_pcp") {
    cfg.beta_pcp = parse_double(value, key);
  } else if (key == "beta_two_staged") {
    cfg.beta_two_staged = parse_double(value, key);
  } else if (key == "n_trials") {
    cfg.n_trials = static_cast<int>(parse_int(value, key));
  } else if (key == "n_samples") {
    cfg.n_samples = static_cast<int>(parse_int(value, key));
  } else if (key == "seed") {
    cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
  } else if (key == "weight_source") {
    cfg.weight_source = source_from_name(value);
  } else if (key == "frac_train") {
    cfg.fractions[0] = parse_double(value, key);
  } else if (key == "frac_valid") {
    cfg.fractions[1] = parse_double(value, key);
  } else if (key == "frac_calib") {
    cfg.fractions[2] = parse_double(value, key);
  } else if (key == "frac_test") {
    cfg.fractions[3] = parse_double(value, key);
  } else if (key == "scarce_mode") {
    cfg.scarce_mode = parse_int(value, key) != 0;
    if (cfg.scarce_mode) {
      // App-default scarce preset: no calibration split, LOO methods.
      cfg.fractions = {0.3, 0.1, 0.0, 0.6};
      cfg.methods = {Method::LooPcp};
    }
  } else if (key == "grid_size") {
    cfg.grid_size = static_cast<int>(parse_int(value, key));
  } else if (key == "loo_cap") {
    cfg.loo_cap = static_cast<int>(parse_int(value, key));
  } else if (key == "n_threads") {
    cfg.n_threads = static_cast<int>(parse_int(value, key));
  } else if (key == "target_corruption_mean") {
    cfg.target_corruption_mean = parse_double(value, key);
  } else if (key == "fit_lr") {
    cfg.fit_lr = parse_double(value, key);
  } else if (key == "fit_epochs") {
    cfg.fit_epochs = static_cast<int>(parse_int(value, key));
  } else if (key == "fit_patience") {
    cfg.fit_patience = static_cast<int>(parse_int(value, key));
  } else {
    throw ConfigError("unknown config key: " + key);
  }
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_config_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string report_csv_header() { return "trial,method,coverage,avg_size,alpha,beta,seed"; }

void write_report_csv(const std::vector<ReportRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("write_report_csv: cannot open " + path);
  out << report_csv_header() << "\n";
  for (const auto& r : rows) {
    char line[256];
    std::snprintf(line, sizeof(line), "%d,%s,%.10g,%.10g,%.10g,%.10g,%llu", r.trial,
                  r.method.c_str(), r.coverage, r.avg_size, r.alpha, r.beta,
                  static_cast<unsigned long long>(r.seed));
    out << line << "\n";
  }
}

}  // namespace privcal
