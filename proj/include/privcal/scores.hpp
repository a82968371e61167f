#pragma once

#include <vector>

#include "privcal/core.hpp"

namespace privcal {

enum class ScoreKind { AbsResidual, CQR, HPS };

/// |pred - y|
double abs_residual(double pred, double y);

/// max(q_lo - y, y - q_hi); negative strictly inside the band.
double cqr_score(double q_lo, double q_hi, double y);

/// 1 - probs[y]; probs must sum to 1 within 1e-6.
double hps_score(const std::vector<double>& probs, int y);

/// What a fitted model reports for one input, shaped to match a ScoreKind:
/// point prediction, quantile band, or class-probability simplex.
struct ModelOutput {
  enum class Kind { Point, Band, Simplex };
  Kind kind = Kind::Point;
  double pred = 0.0;
  double q_lo = 0.0, q_hi = 0.0;
  std::vector<double> probs;

  static ModelOutput point(double pred);
  static ModelOutput band(double q_lo, double q_hi);
  static ModelOutput simplex(std::vector<double> probs);
};

/// Set inversion {y : S(x, y) <= Q}. An Infinite threshold yields FullSpace;
/// a CQR threshold below the negative half-band collapses to the midpoint
/// interval.
PredictionSet invert(ScoreKind kind, const ModelOutput& output, const Threshold& threshold);

}  // namespace privcal
