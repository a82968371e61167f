#include "privcal/core.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "privcal/errors.hpp"

namespace privcal {

TaskKind TaskKind::classification(int k) {
  if (k < 2) throw Error("classification needs at least 2 classes");
  return {Task::Classification, k};
}

SplitIndices split_dataset(const Dataset& dataset,
                           const std::array<double, 4>& fractions,
                           std::uint64_t seed) {
  const std::size_t n = dataset.size();
  if (n == 0) throw EmptyInput("split_dataset: empty dataset");
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw Error("split_dataset: negative fraction");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("split_dataset: fractions must sum to 1");

  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);

  // Floor-allocate valid/calib/test; the remainder goes to train so the
  // calibration set is never larger than configured.
  auto part_size = [n](double f) {
    return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9));
  };
  const std::size_t n_valid = part_size(fractions[1]);
  const std::size_t n_calib = part_size(fractions[2]);
  const std::size_t n_test = part_size(fractions[3]);
  if (n_valid + n_calib + n_test > n) throw Error("split_dataset: parts exceed dataset");
  const std::size_t n_train = n - n_valid - n_calib - n_test;

  const char* names[4] = {"train", "valid", "calib", "test"};
  const std::size_t sizes[4] = {n_train, n_valid, n_calib, n_test};
  for (int p = 0; p < 4; ++p) {
    if (fractions[static_cast<std::size_t>(p)] > 0.0 && sizes[p] == 0) {
      throw EmptyPart(std::string("split_dataset: nonzero fraction yields empty ") + names[p]);
    }
  }

  SplitIndices out;
  auto it = idx.begin();
  out.train.assign(it, it + static_cast<std::ptrdiff_t>(n_train));
  it += static_cast<std::ptrdiff_t>(n_train);
  out.valid.assign(it, it + static_cast<std::ptrdiff_t>(n_valid));
  it += static_cast<std::ptrdiff_t>(n_valid);
  out.calib.assign(it, it + static_cast<std::ptrdiff_t>(n_calib));
  it += static_cast<std::ptrdiff_t>(n_calib);
  out.test.assign(it, idx.end());
  return out;
}

PredictionSet PredictionSet::interval(double lo, double hi) {
  if (lo > hi) throw Error("PredictionSet::interval: lo > hi");
  PredictionSet s;
  s.kind = Kind::Interval;
  s.lo = lo;
  s.hi = hi;
  return s;
}

PredictionSet PredictionSet::label_set(std::vector<int> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  PredictionSet s;
  s.kind = Kind::LabelSet;
  s.labels = std::move(labels);
  return s;
}

bool PredictionSet::contains(double y) const {
  switch (kind) {
    case Kind::FullSpace:
      return true;
    case Kind::Interval:
      return lo <= y && y <= hi;
    case Kind::LabelSet: {
      const int c = static_cast<int>(std::llround(y));
      return std::binary_search(labels.begin(), labels.end(), c);
    }
  }
  return false;
}

double PredictionSet::size_measure(const TaskKind& task, double length_cap) const {
  switch (kind) {
    case Kind::FullSpace:
      return task.task == Task::Classification ? static_cast<double>(task.num_classes)
                                               : length_cap;
    case Kind::Interval:
      return hi - lo;
    case Kind::LabelSet:
      return static_cast<double>(labels.size());
  }
  return 0.0;
}

TrialMetrics evaluate(const std::vector<PredictionSet>& sets,
                      const std::vector<double>& truths,
                      const TaskKind& task,
                      double length_cap) {
  if (sets.size() != truths.size()) throw LengthMismatch("evaluate: sets vs truths");
  if (sets.empty()) throw EmptyInput("evaluate: no test points");
  std::size_t covered = 0;
  double size_sum = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (sets[i].contains(truths[i])) ++covered;
    size_sum += sets[i].size_measure(task, length_cap);
  }
  TrialMetrics m;
  m.n_test = static_cast<int>(sets.size());
  m.coverage = static_cast<double>(covered) / static_cast<double>(sets.size());
  m.avg_size = size_sum / static_cast<double>(sets.size());
  return m;
}

}  // namespace privcal
