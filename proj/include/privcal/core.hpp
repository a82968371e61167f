#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace privcal {

/// Missing cells (features or responses) are encoded as quiet NaN.
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }
inline bool is_missing(double v) { return std::isnan(v); }

/// Row-major table of doubles; the matrix shape used across the library.
using Rows = std::vector<std::vector<double>>;

enum class Task { Regression, Classification };

struct TaskKind {
  Task task = Task::Regression;
  int num_classes = 0;  // >= 2 when classification

  static TaskKind regression() { return {Task::Regression, 0}; }
  static TaskKind classification(int k);
};

/// One calibration unit: observed features, observed response (NaN when the
/// response is missing), the privileged-information vector (always clean),
/// and the corruption bit (1 = corrupted).
struct Sample {
  std::vector<double> x_obs;
  double y_obs = 0.0;
  std::vector<double> z;
  int m = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  TaskKind task = TaskKind::regression();
  std::vector<double> ground_truth_y;  // empty when unavailable

  std::size_t size() const { return samples.size(); }
  std::size_t x_dim() const { return samples.empty() ? 0 : samples.front().x_obs.size(); }
  std::size_t z_dim() const { return samples.empty() ? 0 : samples.front().z.size(); }
};

struct SplitIndices {
  std::vector<int> train, valid, calib, test;
};

/// Shuffles indices with the given seed and allocates parts by floor(frac*n),
/// remainder to train. Throws EmptyPart when a nonzero fraction rounds to
/// zero samples.
SplitIndices split_dataset(const Dataset& dataset,
                           const std::array<double, 4>& fractions,
                           std::uint64_t seed);

/// Score cutoff; `inf` marks the infinity sentinel (the inverted set is the
/// whole space).
struct Threshold {
  double q = 0.0;
  bool inf = false;

  static Threshold finite(double v) { return {v, false}; }
  static Threshold infinite() { return {0.0, true}; }
};

inline bool operator==(const Threshold& a, const Threshold& b) {
  if (a.inf || b.inf) return a.inf == b.inf;
  return a.q == b.q;
}

/// Ordering with Infinite above every finite value.
inline bool threshold_le(const Threshold& a, const Threshold& b) {
  if (b.inf) return true;
  if (a.inf) return false;
  return a.q <= b.q;
}

inline bool threshold_lt(const Threshold& a, const Threshold& b) {
  return threshold_le(a, b) && !(a == b);
}

struct PredictionSet {
  enum class Kind { Interval, LabelSet, FullSpace };
  Kind kind = Kind::FullSpace;
  double lo = 0.0, hi = 0.0;
  std::vector<int> labels;  // sorted, unique

  static PredictionSet interval(double lo, double hi);
  static PredictionSet label_set(std::vector<int> labels);
  static PredictionSet full_space() { return {}; }

  bool contains(double y) const;
  /// Interval length, label count, or `length_cap` for FullSpace.
  double size_measure(const TaskKind& task, double length_cap) const;
};

struct TrialMetrics {
  double coverage = 0.0;
  double avg_size = 0.0;
  int n_test = 0;
};

/// Coverage counts y in set; FullSpace always covers and contributes
/// length_cap (regression) or num_classes (classification) to avg_size.
TrialMetrics evaluate(const std::vector<PredictionSet>& sets,
                      const std::vector<double>& truths,
                      const TaskKind& task,
                      double length_cap);

}  // namespace privcal
