#include <doctest.h>

#include <cmath>
#include <random>

#include "privcal/errors.hpp"
#include "privcal/weights.hpp"

using namespace privcal;

TEST_CASE("likelihood_ratio direct values") {
  WeightModel m;
  m.marginal_clean = 0.8;
  m.oracle = true;
  m.conditional_raw = [](const std::vector<double>&) { return 0.5; };
  CHECK(likelihood_ratio(m, {0.0}) == doctest::Approx(1.6));

  m.conditional_raw = [](const std::vector<double>&) { return 0.8; };
  CHECK(likelihood_ratio(m, {0.0}) == doctest::Approx(1.0));
}

TEST_CASE("estimated models clamp to the floor") {
  WeightModel m;
  m.marginal_clean = 0.8;
  m.oracle = false;
  m.p_floor = 1e-3;
  m.conditional_raw = [](const std::vector<double>&) { return 1e-9; };
  CHECK(likelihood_ratio(m, {0.0}) == doctest::Approx(800.0));

  m.conditional_raw = [](const std::vector<double>&) { return 2.0; };
  CHECK(likelihood_ratio(m, {0.0}) == doctest::Approx(0.8));
}

TEST_CASE("oracle models refuse nonpositive conditionals") {
  WeightModel m;
  m.marginal_clean = 0.8;
  m.oracle = true;
  m.conditional_raw = [](const std::vector<double>&) { return 0.0; };
  CHECK_THROWS_AS(likelihood_ratio(m, {0.0}), WeightUndefined);
}

TEST_CASE("no-shift identity: conditional equal to marginal gives weight one") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double p = u(rng);
    WeightModel m;
    m.marginal_clean = p;
    m.oracle = true;
    m.conditional_raw = [p](const std::vector<double>&) { return p; };
    REQUIRE(likelihood_ratio(m, {u(rng)}) == doctest::Approx(1.0));
  }
}

TEST_CASE("clamped weights stay inside [marginal, marginal/p_floor]") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> raw_dist(-0.5, 1.5);
  WeightModel m;
  m.marginal_clean = 0.7;
  m.oracle = false;
  m.p_floor = 1e-3;
  for (int i = 0; i < 300; ++i) {
    const double raw = raw_dist(rng);
    m.conditional_raw = [raw](const std::vector<double>&) { return raw; };
    const double w = likelihood_ratio(m, {0.0});
    REQUIRE(w >= 0.7 - 1e-12);
    REQUIRE(w <= 0.7 / 1e-3 + 1e-9);
  }
}

TEST_CASE("estimate_marginal_clean_rate") {
  CHECK(estimate_marginal_clean_rate({0, 0, 0, 0}) == 1.0);
  CHECK(estimate_marginal_clean_rate({1, 1, 1, 1}) == 0.0);
  CHECK(estimate_marginal_clean_rate({0, 1, 0, 1}) == 0.5);
  CHECK_THROWS_AS(estimate_marginal_clean_rate({}), EmptyInput);

  std::mt19937_64 rng(11);
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<int> bits(1 + rng() % 100);
    double mean = 0.0;
    for (int& b : bits) {
      b = static_cast<int>(rng() % 2);
      mean += b;
    }
    mean /= static_cast<double>(bits.size());
    REQUIRE(estimate_marginal_clean_rate(bits) == doctest::Approx(1.0 - mean));
  }
}

TEST_CASE("fit_corruption_classifier separates 1-D data") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> noise(0.0, 0.3);
  Rows feats;
  std::vector<int> m_bits;
  for (int i = 0; i < 400; ++i) {
    const double z = (i % 2 == 0 ? -1.0 : 1.0) + noise(rng);
    feats.push_back({z});
    m_bits.push_back(z > 0.0 ? 1 : 0);
  }
  const auto model = fit_corruption_classifier(feats, m_bits, LogisticConfig{});
  CHECK(model.conditional({-5.0}) >= 0.95);
  CHECK(model.conditional({5.0}) <= 0.05 + model.p_floor);
}

TEST_CASE("fit_corruption_classifier degenerate labels give the marginal") {
  Rows feats = {{0.0}, {1.0}, {2.0}};
  const auto all_clean = fit_corruption_classifier(feats, {0, 0, 0}, LogisticConfig{});
  CHECK(all_clean.conditional({42.0}) == doctest::Approx(1.0));
  CHECK(all_clean.marginal_clean == doctest::Approx(1.0));

  const auto all_bad = fit_corruption_classifier(feats, {1, 1, 1}, LogisticConfig{});
  CHECK(all_bad.marginal_clean == doctest::Approx(0.0));
}

TEST_CASE("logistic gradient matches central finite differences") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 30, d = 4;
    Rows feats(n, std::vector<double>(d));
    std::vector<int> bits(n);
    for (auto& row : feats)
      for (double& v : row) v = normal(rng);
    for (int& b : bits) b = static_cast<int>(rng() % 2);
    std::vector<double> theta(d + 1);
    for (double& v : theta) v = normal(rng);

    const auto grad = logistic_nll_grad(theta, feats, bits);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
      auto plus = theta, minus = theta;
      plus[j] += h;
      minus[j] -= h;
      const double fd = (logistic_nll(plus, feats, bits) - logistic_nll(minus, feats, bits)) / (2 * h);
      num += (fd - grad[j]) * (fd - grad[j]);
      den += fd * fd;
    }
    REQUIRE(std::sqrt(num) / std::max(std::sqrt(den), 1e-12) < 1e-4);
  }
}

TEST_CASE("conditioning on features and PI together is exposed") {
  Rows feats = {{0.0, -1.0}, {1.0, 0.5}, {2.0, 1.5}, {3.0, -0.5}};
  const auto model =
      fit_corruption_classifier(feats, {0, 1, 1, 0}, LogisticConfig{}, Conditioning::XAndZ);
  CHECK(model.conditioning == Conditioning::XAndZ);
  CHECK(likelihood_ratio(model, {1.0, 0.0}) > 0.0);
}
