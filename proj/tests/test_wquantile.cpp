#include <doctest.h>

#include <random>

#include "privcal/errors.hpp"
#include "privcal/wquantile.hpp"

using namespace privcal;

namespace {

WeightedDistribution dist_of(std::vector<WeightedAtom> atoms, double inf_mass) {
  WeightedDistribution d;
  d.atoms = std::move(atoms);
  d.inf_mass = inf_mass;
  return d;
}

}  // namespace

TEST_CASE("weighted_quantile on the unit-mass ladder") {
  const auto d = dist_of({{1, 1}, {2, 1}, {3, 1}}, 1.0);
  // Normalized cumulative masses 0.25, 0.50, 0.75.
  CHECK(weighted_quantile(0.5, d) == Threshold::finite(2.0));
  CHECK(weighted_quantile(0.9, d) == Threshold::infinite());
  CHECK(weighted_quantile(0.75, d) == Threshold::finite(3.0));
  CHECK(weighted_quantile(0.25, d) == Threshold::finite(1.0));
}

TEST_CASE("weighted_quantile single atom carries all mass") {
  CHECK(weighted_quantile(0.99, dist_of({{5, 1}}, 0.0)) == Threshold::finite(5.0));
}

TEST_CASE("weighted_quantile merges ties before scanning") {
  // Two atoms at the same value jointly reach the level.
  const auto d = dist_of({{2, 1}, {1, 1}, {2, 1}, {3, 1}}, 0.0);
  CHECK(weighted_quantile(0.7, d) == Threshold::finite(2.0));
  // Order of input atoms is irrelevant.
  const auto d2 = dist_of({{3, 1}, {2, 1}, {1, 1}, {2, 1}}, 0.0);
  CHECK(weighted_quantile(0.7, d2) == Threshold::finite(2.0));
}

TEST_CASE("weighted_quantile rejects bad inputs") {
  const auto d = dist_of({{1, 1}}, 0.0);
  CHECK_THROWS_AS(weighted_quantile(0.0, d), BadLevel);
  CHECK_THROWS_AS(weighted_quantile(1.5, d), BadLevel);
  CHECK_THROWS_AS(weighted_quantile(0.5, dist_of({}, 0.0)), Error);
  CHECK_THROWS_AS(weighted_quantile(0.5, dist_of({{1, -1}}, 2.0)), Error);
}

TEST_CASE("weighted_quantile_oracle matches the frozen examples") {
  const auto d = dist_of({{1, 1}, {2, 1}, {3, 1}}, 1.0);
  CHECK(weighted_quantile_oracle(0.5, d) == Threshold::finite(2.0));
  CHECK(weighted_quantile_oracle(0.9, d) == Threshold::infinite());
  CHECK(weighted_quantile_oracle(1.0, d) == Threshold::infinite());
  CHECK(weighted_quantile_oracle(1.0, dist_of({{1, 2}, {0, 1}}, 0.0)) == Threshold::finite(1.0));
}

TEST_CASE("oracle equivalence on random grid-valued instances") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> n_dist(0, 20);
  std::uniform_int_distribution<int> value_dist(-20, 20);
  std::uniform_int_distribution<int> mass_dist(0, 20);
  std::uniform_real_distribution<double> level_dist(1e-9, 1.0);
  int tested = 0;
  while (tested < 2000) {
    WeightedDistribution d;
    const int n = n_dist(rng);
    for (int i = 0; i < n; ++i) {
      d.atoms.push_back({value_dist(rng) * 0.5, mass_dist(rng) * 0.25});
    }
    d.inf_mass = mass_dist(rng) * 0.25;
    double total = d.inf_mass;
    for (const auto& a : d.atoms) total += a.mass;
    if (!(total > 0.0)) continue;
    const double level = level_dist(rng);
    ++tested;
    REQUIRE(weighted_quantile(level, d) == weighted_quantile_oracle(level, d));
  }
}

TEST_CASE("quantile monotone in the infinity mass") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> n_dist(0, 20);
  std::uniform_real_distribution<double> value_dist(-10.0, 10.0);
  std::uniform_real_distribution<double> mass_dist(0.0, 5.0);
  std::uniform_real_distribution<double> level_dist(1e-9, 1.0);
  int tested = 0;
  while (tested < 2000) {
    WeightedDistribution d;
    const int n = n_dist(rng);
    for (int i = 0; i < n; ++i) d.atoms.push_back({value_dist(rng), mass_dist(rng)});
    const double w_small = mass_dist(rng);
    const double w_large = w_small + mass_dist(rng);
    double total = w_small;
    for (const auto& a : d.atoms) total += a.mass;
    if (!(total > 0.0)) continue;
    const double level = level_dist(rng);
    ++tested;
    d.inf_mass = w_small;
    const Threshold q_small = weighted_quantile(level, d);
    d.inf_mass = w_large;
    const Threshold q_large = weighted_quantile(level, d);
    REQUIRE(threshold_le(q_small, q_large));
  }
}

TEST_CASE("mass scale invariance") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> value_dist(-10.0, 10.0);
  std::uniform_real_distribution<double> mass_dist(0.0, 5.0);
  std::uniform_real_distribution<double> level_dist(1e-9, 1.0);
  std::uniform_real_distribution<double> scale_dist(0.01, 100.0);
  for (int inst = 0; inst < 500; ++inst) {
    WeightedDistribution d;
    for (int i = 0; i < 10; ++i) d.atoms.push_back({value_dist(rng), mass_dist(rng)});
    d.inf_mass = mass_dist(rng) + 0.1;
    const double level = level_dist(rng);
    const Threshold base = weighted_quantile(level, d);

    const double c = scale_dist(rng);
    WeightedDistribution scaled = d;
    for (auto& a : scaled.atoms) a.mass *= c;
    scaled.inf_mass *= c;
    REQUIRE(weighted_quantile(level, scaled) == base);
  }
}

TEST_CASE("cp_quantile frozen examples") {
  std::vector<double> nine = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(cp_quantile(nine, 0.1) == Threshold::finite(9.0));  // (1+1/9)*0.9 rank = max

  std::vector<double> nineteen;
  for (int i = 1; i <= 19; ++i) nineteen.push_back(i);
  CHECK(cp_quantile(nineteen, 0.1) == Threshold::finite(18.0));  // ceil(20*0.9) = 18

  CHECK(cp_quantile({5.0}, 0.5) == Threshold::finite(5.0));  // ceil(2*0.5) = 1
  CHECK(cp_quantile({5.0}, 0.4) == Threshold::infinite());   // 2*0.6 = 1.2 > 1

  CHECK_THROWS_AS(cp_quantile({}, 0.1), EmptyScores);
  CHECK_THROWS_AS(cp_quantile({1.0}, 0.0), BadLevel);
}

TEST_CASE("uniform-weight reduction ties cp_quantile to the weighted engine") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> n_dist(1, 50);
  std::normal_distribution<double> score_dist(0.0, 2.0);
  std::uniform_real_distribution<double> alpha_dist(0.01, 0.99);
  std::uniform_real_distribution<double> w_dist(0.1, 5.0);
  for (int inst = 0; inst < 500; ++inst) {
    const int n = n_dist(rng);
    const double alpha = alpha_dist(rng);
    const double w = w_dist(rng);
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (double& s : scores) s = score_dist(rng);

    WeightedDistribution d;
    for (double s : scores) d.atoms.push_back({s, w});
    d.inf_mass = w;
    REQUIRE(weighted_quantile(1.0 - alpha, d) == cp_quantile(scores, alpha));
  }
}
