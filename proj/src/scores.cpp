#include "privcal/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "privcal/errors.hpp"

namespace privcal {

double abs_residual(double pred, double y) {
  return std::abs(pred - y);
}

double cqr_score(double q_lo, double q_hi, double y) {
  if (q_lo > q_hi) throw InvalidBand("cqr_score: q_lo > q_hi");
  return std::max(q_lo - y, y - q_hi);
}

double hps_score(const std::vector<double>& probs, int y) {
  if (y < 0 || static_cast<std::size_t>(y) >= probs.size()) {
    throw BadClassIndex("hps_score: class index out of range");
  }
  const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-6) throw Error("hps_score: probs must sum to 1");
  return 1.0 - probs[static_cast<std::size_t>(y)];
}

ModelOutput ModelOutput::point(double pred) {
  ModelOutput o;
  o.kind = Kind::Point;
  o.pred = pred;
  return o;
}

ModelOutput ModelOutput::band(double q_lo, double q_hi) {
  if (q_lo > q_hi) throw InvalidBand("ModelOutput::band: q_lo > q_hi");
  ModelOutput o;
  o.kind = Kind::Band;
  o.q_lo = q_lo;
  o.q_hi = q_hi;
  return o;
}

ModelOutput ModelOutput::simplex(std::vector<double> probs) {
  ModelOutput o;
  o.kind = Kind::Simplex;
  o.probs = std::move(probs);
  return o;
}

PredictionSet invert(ScoreKind kind, const ModelOutput& output, const Threshold& threshold) {
  if (threshold.inf) return PredictionSet::full_space();
  const double q = threshold.q;
  switch (kind) {
    case ScoreKind::AbsResidual: {
      if (output.kind != ModelOutput::Kind::Point) throw ShapeMismatch("invert: expected point");
      if (q < 0.0) {
        return PredictionSet::interval(output.pred, output.pred);
      }
      return PredictionSet::interval(output.pred - q, output.pred + q);
    }
    case ScoreKind::CQR: {
      if (output.kind != ModelOutput::Kind::Band) throw ShapeMismatch("invert: expected band");
      const double half_band = (output.q_hi - output.q_lo) / 2.0;
      if (q < -half_band) {
        const double mid = (output.q_lo + output.q_hi) / 2.0;
        return PredictionSet::interval(mid, mid);
      }
      return PredictionSet::interval(output.q_lo - q, output.q_hi + q);
    }
    case ScoreKind::HPS: {
      if (output.kind != ModelOutput::Kind::Simplex) throw ShapeMismatch("invert: expected simplex");
      std::vector<int> labels;
      for (std::size_t c = 0; c < output.probs.size(); ++c) {
        if (output.probs[c] >= 1.0 - q) labels.push_back(static_cast<int>(c));
      }
      return PredictionSet::label_set(std::move(labels));
    }
  }
  throw ShapeMismatch("invert: unknown score kind");
}

}  // namespace privcal
