#include "privcal/wquantile.hpp"

#include <algorithm>
#include <cmath>

#include "privcal/errors.hpp"

namespace privcal {

namespace {

constexpr double kLevelSlack = 1e-12;

void check_level(double level) {
  if (!(level > 0.0) || level > 1.0) throw BadLevel("quantile level must be in (0,1]");
}

double total_mass(const WeightedDistribution& dist) {
  double total = dist.inf_mass;
  for (const auto& a : dist.atoms) {
    if (a.mass < 0.0) throw Error("weighted_quantile: negative mass");
    if (!std::isfinite(a.value)) throw Error("weighted_quantile: non-finite atom value");
    total += a.mass;
  }
  if (dist.inf_mass < 0.0) throw Error("weighted_quantile: negative inf_mass");
  if (!(total > 0.0)) throw Error("weighted_quantile: total mass must be positive");
  return total;
}

}  // namespace

Threshold weighted_quantile(double level, const WeightedDistribution& dist) {
  check_level(level);
  const double total = total_mass(dist);

  std::vector<WeightedAtom> atoms = dist.atoms;
  std::sort(atoms.begin(), atoms.end(),
            [](const WeightedAtom& a, const WeightedAtom& b) { return a.value < b.value; });

  // Merge equal values so the result does not depend on input order.
  double cum = 0.0;
  std::size_t i = 0;
  while (i < atoms.size()) {
    double mass = atoms[i].mass;
    std::size_t j = i + 1;
    while (j < atoms.size() && atoms[j].value == atoms[i].value) {
      mass += atoms[j].mass;
      ++j;
    }
    cum += mass;
    if (cum / total + kLevelSlack >= level) return Threshold::finite(atoms[i].value);
    i = j;
  }
  return Threshold::infinite();
}

Threshold weighted_quantile_oracle(double level, const WeightedDistribution& dist) {
  check_level(level);
  const double total = total_mass(dist);

  // Exhaustive scan: for each candidate value, recompute the mass at or
  // below it from scratch, then take the smallest candidate that reaches
  // the level.
  bool found = false;
  double best = 0.0;
  for (const auto& cand : dist.atoms) {
    double below = 0.0;
    for (const auto& a : dist.atoms) {
      if (a.value <= cand.value) below += a.mass;
    }
    if (below / total + kLevelSlack >= level) {
      if (!found || cand.value < best) {
        found = true;
        best = cand.value;
      }
    }
  }
  if (found) return Threshold::finite(best);
  return Threshold::infinite();
}

Threshold cp_quantile(const std::vector<double>& scores, double alpha) {
  if (scores.empty()) throw EmptyScores("cp_quantile: empty scores");
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw BadLevel("cp_quantile: alpha must be in (0,1)");
  const double n = static_cast<double>(scores.size());
  const double rank = std::ceil((n + 1.0) * (1.0 - alpha) - kLevelSlack);
  if (rank > n) return Threshold::infinite();
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t k = rank <= 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
  return Threshold::finite(sorted[k]);
}

}  // namespace privcal
