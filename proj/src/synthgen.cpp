#include "privcal/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "privcal/errors.hpp"

namespace privcal {

namespace {

/// House order-statistic convention: the ceil(q*n)-th smallest value.
double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw EmptyInput("empirical_quantile: empty input");
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(q * static_cast<double>(values.size()));
  std::size_t k = rank <= 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
  k = std::min(k, values.size() - 1);
  return values[k];
}

}  // namespace

double CorruptionModel::prob(double initial) const {
  double v = std::min(initial, cap_value) / scale;
  if (v < zero_below) v = 0.0;
  v = std::clamp(v, 0.0, 1.0);
  return v == 0.0 ? 0.0 : std::pow(v, exponent);
}

ProbPipeline corruption_probabilities(const std::vector<double>& initial, double target_mean) {
  if (initial.empty()) throw EmptyInput("corruption_probabilities: empty input");
  if (!(target_mean > 0.0) || !(target_mean < 1.0)) {
    throw Error("corruption_probabilities: target mean must be in (0,1)");
  }
  const double n = static_cast<double>(initial.size());

  CorruptionModel model;
  model.cap_value = empirical_quantile(initial, 0.85);
  model.scale = empirical_quantile(initial, 0.90);
  if (!(model.scale > 0.0)) {
    throw Error("corruption_probabilities: 90% quantile of the initial values must be positive");
  }

  std::vector<double> scaled(initial.size());
  for (std::size_t i = 0; i < initial.size(); ++i) {
    scaled[i] = std::min(initial[i], model.cap_value) / model.scale;
  }
  model.zero_below = empirical_quantile(scaled, 0.75);

  // Zero strictly below the 75th percentile (ties survive), clamp to [0,1].
  std::vector<double> base(scaled.size());
  double positive = 0.0;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    double v = scaled[i] < model.zero_below ? 0.0 : scaled[i];
    v = std::clamp(v, 0.0, 1.0);
    base[i] = v;
    if (v > 0.0) positive += 1.0;
  }
  if (positive / n < target_mean) {
    throw TargetUnreachable("corruption_probabilities: too few positive entries after zeroing");
  }

  auto mean_pow = [&](double e) {
    double s = 0.0;
    for (double v : base) {
      if (v > 0.0) s += std::pow(v, e);
    }
    return s / n;
  };

  // mean(v^e) is non-increasing in e on [0,1]-valued v.
  double lo = 1e-3, hi = 1e3;
  constexpr double kTol = 1e-6;
  if (mean_pow(lo) < target_mean - kTol || mean_pow(hi) > target_mean + kTol) {
    throw TargetUnreachable("corruption_probabilities: target mean not bracketed by the exponent range");
  }
  double mid = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    mid = (lo + hi) / 2.0;
    const double m = mean_pow(mid);
    if (std::abs(m - target_mean) <= kTol) break;
    if (m > target_mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  model.exponent = mid;

  ProbPipeline out;
  out.model = model;
  out.probs.resize(initial.size());
  for (std::size_t i = 0; i < initial.size(); ++i) out.probs[i] = model.prob(initial[i]);
  return out;
}

SynthData gen_synthetic(const SynthConfig& config) {
  if (config.n < 1) throw EmptyInput("gen_synthetic: n must be >= 1");
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> uni_x(1.0, 5.0);
  std::uniform_real_distribution<double> uni_sym(-1.0, 1.0);
  std::uniform_real_distribution<double> uni01(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const int n = config.n;
  Rows x(static_cast<std::size_t>(n), std::vector<double>(10));
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (double& v : x[static_cast<std::size_t>(i)]) v = uni_x(rng);
    [[maybe_unused]] const double e1 = normal(rng);  // drawn by the recipe, never used
    const double e2 = uni_sym(rng);
    const double e3 = normal(rng);
    const double rate = std::cos(e2 + 0.1);
    if (!(rate > 0.0)) throw Error("gen_synthetic: nonpositive Poisson rate");
    std::poisson_distribution<int> pois(rate);
    const double p = static_cast<double>(pois(rng)) * e2;
    z[static_cast<std::size_t>(i)] = p + 2.0 * e3;
  }

  // One coefficient draw per dataset, L1-normalized, applied to the first
  // five feature coordinates.
  std::vector<double> beta(5);
  double l1 = 0.0;
  for (double& b : beta) {
    b = uni01(rng);
    l1 += b;
  }
  for (double& b : beta) b /= l1;

  std::vector<double> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double zi = z[static_cast<std::size_t>(i)];
    const double u = zi < -3.0 ? 1.0 : (zi <= 1.0 ? 2.0 : 8.0);
    const double e = normal(rng);
    double xb = 0.0;
    for (std::size_t j = 0; j < 5; ++j) xb += x[static_cast<std::size_t>(i)][j] * beta[j];
    y[static_cast<std::size_t>(i)] = 0.3 * xb + 0.8 * zi + 0.2 + u * e;
  }

  SynthData out;
  out.data.task = TaskKind::regression();
  out.data.samples.resize(static_cast<std::size_t>(n));
  out.data.ground_truth_y = y;
  for (int i = 0; i < n; ++i) {
    auto& s = out.data.samples[static_cast<std::size_t>(i)];
    s.x_obs = x[static_cast<std::size_t>(i)];
    s.y_obs = y[static_cast<std::size_t>(i)];
    s.z = {z[static_cast<std::size_t>(i)]};
    s.m = 0;
  }

  if (config.target_corruption_mean == 0.0) {
    // Uncorrupted regime: every probability is zero and the fitted
    // transform maps any PI value to zero.
    out.probs.assign(static_cast<std::size_t>(n), 0.0);
    out.prob_model.cap_value = 0.0;
    out.prob_model.scale = 1.0;
    out.prob_model.zero_below = std::numeric_limits<double>::infinity();
    out.prob_model.exponent = 1.0;
    return out;
  }
  const ProbPipeline pipeline = corruption_probabilities(z, config.target_corruption_mean);
  out.probs = pipeline.probs;
  out.prob_model = pipeline.model;
  return out;
}

Dataset apply_corruption(const Dataset& dataset, const std::vector<double>& probs,
                         CorruptionMode mode, std::uint64_t seed) {
  if (probs.size() != dataset.size()) throw LengthMismatch("apply_corruption: probs vs dataset");
  Dataset out = dataset;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni01(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.samples[i].m = uni01(rng) < probs[i] ? 1 : 0;
  }

  const std::vector<double>& y_clean =
      dataset.ground_truth_y.empty() ? std::vector<double>{} : dataset.ground_truth_y;
  auto clean_y = [&](std::size_t i) {
    return y_clean.empty() ? dataset.samples[i].y_obs : y_clean[i];
  };

  switch (mode) {
    case CorruptionMode::MissingResponse: {
      for (auto& s : out.samples) {
        if (s.m == 1) s.y_obs = missing_value();
      }
      break;
    }
    case CorruptionMode::DispersiveNoise: {
      double mean = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) mean += clean_y(i);
      mean /= static_cast<double>(out.size());
      double var = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        var += (clean_y(i) - mean) * (clean_y(i) - mean);
      }
      const double sigma = std::sqrt(var / static_cast<double>(out.size()));
      std::normal_distribution<double> noise(0.0, 5.0 * sigma);
      for (auto& s : out.samples) {
        if (s.m == 1) s.y_obs += noise(rng);
      }
      break;
    }
    case CorruptionMode::ContractiveNoise: {
      double mean = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) mean += clean_y(i);
      mean /= static_cast<double>(out.size());
      for (auto& s : out.samples) {
        if (s.m == 1) s.y_obs = (s.y_obs + mean) / 2.0;
      }
      break;
    }
    case CorruptionMode::MissingFeatures: {
      const std::size_t d = dataset.x_dim();
      const std::size_t n_drop =
          static_cast<std::size_t>(std::ceil(0.2 * static_cast<double>(d)));
      // Rank features by |corr(X_j, Y)| on the clean data.
      std::vector<double> corr(d, 0.0);
      double ymean = 0.0;
      for (std::size_t i = 0; i < dataset.size(); ++i) ymean += clean_y(i);
      ymean /= static_cast<double>(dataset.size());
      double yvar = 0.0;
      for (std::size_t i = 0; i < dataset.size(); ++i) {
        yvar += (clean_y(i) - ymean) * (clean_y(i) - ymean);
      }
      for (std::size_t j = 0; j < d; ++j) {
        double xmean = 0.0;
        for (std::size_t i = 0; i < dataset.size(); ++i) xmean += dataset.samples[i].x_obs[j];
        xmean /= static_cast<double>(dataset.size());
        double cov = 0.0, xvar = 0.0;
        for (std::size_t i = 0; i < dataset.size(); ++i) {
          const double cx = dataset.samples[i].x_obs[j] - xmean;
          cov += cx * (clean_y(i) - ymean);
          xvar += cx * cx;
        }
        corr[j] = xvar > 0.0 && yvar > 0.0 ? std::abs(cov / std::sqrt(xvar * yvar)) : 0.0;
      }
      std::vector<std::size_t> order(d);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return corr[a] > corr[b]; });
      for (auto& s : out.samples) {
        if (s.m != 1) continue;
        for (std::size_t k = 0; k < n_drop && k < d; ++k) s.x_obs[order[k]] = missing_value();
      }
      break;
    }
  }
  return out;
}

namespace {

void write_field(std::string& line, double v) {
  if (is_missing(v)) return;  // empty field
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  line += buf;
}

}  // namespace

void dump_csv(const Dataset& dataset, const std::vector<double>& probs, const std::string& path) {
  if (!probs.empty() && probs.size() != dataset.size()) {
    throw LengthMismatch("dump_csv: probs vs dataset");
  }
  std::ofstream out(path);
  if (!out) throw Error("dump_csv: cannot open " + path);
  const std::size_t d = dataset.x_dim();
  const std::size_t k = dataset.z_dim();
  std::string header;
  for (std::size_t j = 0; j < d; ++j) header += "x_" + std::to_string(j) + ",";
  for (std::size_t j = 0; j < k; ++j) header += "z_" + std::to_string(j) + ",";
  header += "y_obs,m,y_clean,prob";
  out << header << "\n";
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset.samples[i];
    std::string line;
    for (std::size_t j = 0; j < d; ++j) {
      write_field(line, s.x_obs[j]);
      line += ",";
    }
    for (std::size_t j = 0; j < k; ++j) {
      write_field(line, s.z[j]);
      line += ",";
    }
    write_field(line, s.y_obs);
    line += "," + std::to_string(s.m) + ",";
    write_field(line, dataset.ground_truth_y.empty() ? missing_value()
                                                     : dataset.ground_truth_y[i]);
    line += ",";
    write_field(line, probs.empty() ? missing_value() : probs[i]);
    out << line << "\n";
  }
}

LoadedData load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("load_csv: cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw Error("load_csv: empty file");

  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  std::size_t d = 0, k = 0;
  for (const auto& c : cols) {
    if (c.rfind("x_", 0) == 0) ++d;
    if (c.rfind("z_", 0) == 0) ++k;
  }
  if (cols.size() != d + k + 4) throw Error("load_csv: unexpected header");

  LoadedData out;
  out.data.task = TaskKind::regression();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    while (fields.size() < cols.size()) fields.push_back("");
    auto parse = [](const std::string& s) {
      return s.empty() ? missing_value() : std::stod(s);
    };
    Sample s;
    s.x_obs.resize(d);
    s.z.resize(k);
    for (std::size_t j = 0; j < d; ++j) s.x_obs[j] = parse(fields[j]);
    for (std::size_t j = 0; j < k; ++j) s.z[j] = parse(fields[d + j]);
    s.y_obs = parse(fields[d + k]);
    s.m = std::stoi(fields[d + k + 1]);
    out.data.ground_truth_y.push_back(parse(fields[d + k + 2]));
    out.probs.push_back(parse(fields[d + k + 3]));
    out.data.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace privcal
