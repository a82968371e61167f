#include <doctest.h>

#include <random>

#include "privcal/errors.hpp"
#include "privcal/scores.hpp"

using namespace privcal;

TEST_CASE("abs_residual") {
  CHECK(abs_residual(3.0, 3.0) == 0.0);
  CHECK(abs_residual(1.0, 4.0) == 3.0);
  CHECK(abs_residual(-2.0, 2.0) == 4.0);
}

TEST_CASE("cqr_score") {
  CHECK(cqr_score(0, 2, 1) == -1.0);
  CHECK(cqr_score(0, 2, 3) == 1.0);
  CHECK(cqr_score(0, 2, -2) == 2.0);
  CHECK_THROWS_AS(cqr_score(2, 0, 1), InvalidBand);
}

TEST_CASE("hps_score") {
  CHECK(hps_score({1, 0, 0}, 0) == 0.0);
  CHECK(hps_score({0.2, 0.8}, 1) == doctest::Approx(0.2));
  CHECK(hps_score({0.25, 0.25, 0.25, 0.25}, 2) == doctest::Approx(0.75));
  CHECK_THROWS_AS(hps_score({0.5, 0.5}, 2), BadClassIndex);
  CHECK_THROWS_AS(hps_score({0.5, 0.4}, 0), Error);
}

TEST_CASE("invert frozen examples") {
  const auto cqr = invert(ScoreKind::CQR, ModelOutput::band(0, 2), Threshold::finite(0.5));
  CHECK(cqr.kind == PredictionSet::Kind::Interval);
  CHECK(cqr.lo == doctest::Approx(-0.5));
  CHECK(cqr.hi == doctest::Approx(2.5));

  const auto hps =
      invert(ScoreKind::HPS, ModelOutput::simplex({0.7, 0.2, 0.1}), Threshold::finite(0.85));
  CHECK(hps.labels == std::vector<int>{0, 1});

  const auto full = invert(ScoreKind::AbsResidual, ModelOutput::point(1.0), Threshold::infinite());
  CHECK(full.kind == PredictionSet::Kind::FullSpace);
}

TEST_CASE("invert CQR empty set collapses to the midpoint") {
  const auto s = invert(ScoreKind::CQR, ModelOutput::band(0, 2), Threshold::finite(-1.5));
  CHECK(s.lo == s.hi);
  CHECK(s.lo == doctest::Approx(1.0));
}

TEST_CASE("invert shape mismatches") {
  CHECK_THROWS_AS(invert(ScoreKind::CQR, ModelOutput::point(1.0), Threshold::finite(0)),
                  ShapeMismatch);
  CHECK_THROWS_AS(invert(ScoreKind::HPS, ModelOutput::band(0, 1), Threshold::finite(0)),
                  ShapeMismatch);
}

TEST_CASE("round-trip: y in inverted set iff score at or below threshold") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int inst = 0; inst < 200; ++inst) {
    const double pred = u(rng);
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    const double q_abs = std::abs(u(rng));
    const double q_cqr = u(rng);

    const auto set_abs = invert(ScoreKind::AbsResidual, ModelOutput::point(pred),
                                Threshold::finite(q_abs));
    const auto set_cqr =
        invert(ScoreKind::CQR, ModelOutput::band(lo, hi), Threshold::finite(q_cqr));
    const bool cqr_collapsed = q_cqr < -(hi - lo) / 2.0;
    for (int g = 0; g <= 100; ++g) {
      const double y = -6.0 + 12.0 * g / 100.0;
      REQUIRE(set_abs.contains(y) == (abs_residual(pred, y) <= q_abs));
      if (!cqr_collapsed) {
        REQUIRE(set_cqr.contains(y) == (cqr_score(lo, hi, y) <= q_cqr));
      }
    }
  }
}

TEST_CASE("round-trip for HPS on random simplexes") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int inst = 0; inst < 200; ++inst) {
    const int k = 2 + static_cast<int>(rng() % 6);
    std::vector<double> probs(static_cast<std::size_t>(k));
    double total = 0.0;
    for (double& p : probs) {
      p = u(rng) + 1e-3;
      total += p;
    }
    for (double& p : probs) p /= total;
    const double q = u(rng);
    const auto set = invert(ScoreKind::HPS, ModelOutput::simplex(probs), Threshold::finite(q));
    for (int c = 0; c < k; ++c) {
      REQUIRE(set.contains(c) == (hps_score(probs, c) <= q));
    }
  }
}

TEST_CASE("monotone nesting in the threshold") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int inst = 0; inst < 200; ++inst) {
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    const double q1 = u(rng);
    const double q2 = q1 + std::abs(u(rng));
    const auto s1 = invert(ScoreKind::CQR, ModelOutput::band(lo, hi), Threshold::finite(q1));
    const auto s2 = invert(ScoreKind::CQR, ModelOutput::band(lo, hi), Threshold::finite(q2));
    REQUIRE(s2.lo <= s1.lo);
    REQUIRE(s1.hi <= s2.hi);
  }
}

TEST_CASE("HPS label count non-decreasing in the threshold") {
  const std::vector<double> probs = {0.5, 0.3, 0.15, 0.05};
  std::size_t prev = 0;
  for (double q = 0.0; q <= 1.0; q += 0.01) {
    const auto set = invert(ScoreKind::HPS, ModelOutput::simplex(probs), Threshold::finite(q));
    REQUIRE(set.labels.size() >= prev);
    prev = set.labels.size();
  }
}
