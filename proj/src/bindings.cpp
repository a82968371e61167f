#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "privcal/calibrators.hpp"
#include "privcal/core.hpp"
#include "privcal/errors.hpp"
#include "privcal/harness.hpp"
#include "privcal/models.hpp"
#include "privcal/scores.hpp"
#include "privcal/synthgen.hpp"
#include "privcal/weights.hpp"
#include "privcal/wquantile.hpp"

namespace py = pybind11;
using namespace privcal;

namespace {

Threshold threshold_from_obj(const py::object& obj) {
  if (obj.is_none()) return Threshold::infinite();
  return Threshold::finite(obj.cast<double>());
}

py::object threshold_to_obj(const Threshold& t) {
  if (t.inf) return py::none();
  return py::float_(t.q);
}

py::dict row_to_dict(const ReportRow& r) {
  py::dict d;
  d["trial"] = r.trial;
  d["method"] = r.method;
  d["coverage"] = r.coverage;
  d["avg_size"] = r.avg_size;
  d["alpha"] = r.alpha;
  d["beta"] = r.beta;
  d["seed"] = r.seed;
  return d;
}

WeightedDistribution dist_from_lists(const std::vector<std::pair<double, double>>& atoms,
                                     double inf_mass) {
  WeightedDistribution d;
  for (const auto& [value, mass] : atoms) d.atoms.push_back({value, mass});
  d.inf_mass = inf_mass;
  return d;
}

CalibInput input_from_lists(const std::vector<double>& scores, const std::vector<double>& weights,
                            const std::vector<int>& m_bits, double alpha, double beta) {
  if (scores.size() != weights.size() || scores.size() != m_bits.size()) {
    throw LengthMismatch("scores, weights and m_bits must align");
  }
  CalibInput ci;
  ci.alpha = alpha;
  ci.beta = beta;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    ci.entries.push_back({scores[i], weights[i], m_bits[i]});
  }
  return ci;
}

ExperimentConfig config_from_kwargs(const py::kwargs& kwargs) {
  ExperimentConfig cfg;
  // scarce_mode installs its preset first, mirroring the CLI.
  if (kwargs.contains("scarce_mode")) {
    apply_config_override(cfg, "scarce_mode",
                          std::to_string(kwargs["scarce_mode"].cast<int>()));
  }
  for (const auto& item : kwargs) {
    const auto key = item.first.cast<std::string>();
    if (key == "scarce_mode") continue;
    apply_config_override(cfg, key, py::str(item.second).cast<std::string>());
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_privcal, m) {
  m.doc() = "Calibrated prediction sets under corrupted training data";

  py::register_exception<Error>(m, "PrivcalError");

  // Weighted quantile engine. Thresholds cross the boundary as float-or-None
  // (None is the infinity sentinel).
  m.def(
      "weighted_quantile",
      [](double level, const std::vector<std::pair<double, double>>& atoms, double inf_mass) {
        return threshold_to_obj(weighted_quantile(level, dist_from_lists(atoms, inf_mass)));
      },
      py::arg("level"), py::arg("atoms"), py::arg("inf_mass") = 0.0,
      "Smallest value whose cumulative mass reaches the level; None when only "
      "the infinity mass does. Atoms are (value, mass) pairs.");
  m.def(
      "weighted_quantile_oracle",
      [](double level, const std::vector<std::pair<double, double>>& atoms, double inf_mass) {
        return threshold_to_obj(weighted_quantile_oracle(level, dist_from_lists(atoms, inf_mass)));
      },
      py::arg("level"), py::arg("atoms"), py::arg("inf_mass") = 0.0);
  m.def(
      "cp_quantile",
      [](const std::vector<double>& scores, double alpha) {
        return threshold_to_obj(cp_quantile(scores, alpha));
      },
      py::arg("scores"), py::arg("alpha"));

  // Non-conformity scores.
  m.def("abs_residual", &abs_residual, py::arg("pred"), py::arg("y"));
  m.def("cqr_score", &cqr_score, py::arg("q_lo"), py::arg("q_hi"), py::arg("y"));
  m.def("hps_score", &hps_score, py::arg("probs"), py::arg("y"));

  py::class_<PredictionSet>(m, "PredictionSet")
      .def_property_readonly("kind",
                             [](const PredictionSet& s) {
                               switch (s.kind) {
                                 case PredictionSet::Kind::Interval: return "interval";
                                 case PredictionSet::Kind::LabelSet: return "label_set";
                                 case PredictionSet::Kind::FullSpace: return "full_space";
                               }
                               return "unknown";
                             })
      .def_readonly("lo", &PredictionSet::lo)
      .def_readonly("hi", &PredictionSet::hi)
      .def_readonly("labels", &PredictionSet::labels)
      .def("contains", &PredictionSet::contains, py::arg("y"))
      .def("__repr__", [](const PredictionSet& s) {
        std::ostringstream os;
        switch (s.kind) {
          case PredictionSet::Kind::Interval:
            os << "PredictionSet(interval, [" << s.lo << ", " << s.hi << "])";
            break;
          case PredictionSet::Kind::LabelSet:
            os << "PredictionSet(label_set, " << s.labels.size() << " labels)";
            break;
          case PredictionSet::Kind::FullSpace:
            os << "PredictionSet(full_space)";
            break;
        }
        return os.str();
      });

  m.def(
      "invert_cqr",
      [](double q_lo, double q_hi, const py::object& threshold) {
        return invert(ScoreKind::CQR, ModelOutput::band(q_lo, q_hi),
                      threshold_from_obj(threshold));
      },
      py::arg("q_lo"), py::arg("q_hi"), py::arg("threshold"));
  m.def(
      "invert_abs_residual",
      [](double pred, const py::object& threshold) {
        return invert(ScoreKind::AbsResidual, ModelOutput::point(pred),
                      threshold_from_obj(threshold));
      },
      py::arg("pred"), py::arg("threshold"));
  m.def(
      "invert_hps",
      [](const std::vector<double>& probs, const py::object& threshold) {
        return invert(ScoreKind::HPS, ModelOutput::simplex(probs), threshold_from_obj(threshold));
      },
      py::arg("probs"), py::arg("threshold"));

  // Calibrators over parallel (scores, weights, m_bits) lists; corrupted
  // entries may carry nan scores.
  m.def(
      "calibrate_naive",
      [](const std::vector<double>& scores, const std::vector<int>& m_bits, double alpha,
         bool use_corrupted) {
        const auto ci = input_from_lists(scores, std::vector<double>(scores.size(), 1.0), m_bits,
                                         alpha, alpha / 2.0);
        return threshold_to_obj(calibrate_naive(ci, use_corrupted));
      },
      py::arg("scores"), py::arg("m_bits"), py::arg("alpha"), py::arg("use_corrupted") = false);
  m.def(
      "calibrate_wcp",
      [](const std::vector<double>& scores, const std::vector<double>& weights,
         const std::vector<int>& m_bits, double test_weight, double level) {
        const auto ci = input_from_lists(scores, weights, m_bits, 0.5, 0.25);
        return threshold_to_obj(calibrate_wcp(ci, test_weight, level));
      },
      py::arg("scores"), py::arg("weights"), py::arg("m_bits"), py::arg("test_weight"),
      py::arg("level"));
  m.def(
      "calibrate_pcp",
      [](const std::vector<double>& scores, const std::vector<double>& weights,
         const std::vector<int>& m_bits, double alpha, double beta, bool naive_variant) {
        const auto ci = input_from_lists(scores, weights, m_bits, alpha, beta);
        return threshold_to_obj(naive_variant ? calibrate_pcp_naive(ci)
                                              : calibrate_pcp_efficient(ci));
      },
      py::arg("scores"), py::arg("weights"), py::arg("m_bits"), py::arg("alpha"), py::arg("beta"),
      py::arg("naive_variant") = false);
  m.def(
      "loo_pcp_predict",
      [](const std::vector<double>& band_lo, const std::vector<double>& band_hi,
         const std::vector<double>& scores, const std::vector<double>& weights,
         const std::vector<int>& m_bits, double alpha, double beta) {
        LooInput input;
        input.band_lo = band_lo;
        input.band_hi = band_hi;
        input.scores = scores;
        input.weights = weights;
        input.m_bits = m_bits;
        input.alpha = alpha;
        input.beta = beta;
        return loo_pcp_predict(input);
      },
      py::arg("band_lo"), py::arg("band_hi"), py::arg("scores"), py::arg("weights"),
      py::arg("m_bits"), py::arg("alpha"), py::arg("beta"));

  // Weights.
  m.def("estimate_marginal_clean_rate", &estimate_marginal_clean_rate, py::arg("m_bits"));
  m.def(
      "likelihood_ratio_from_probs",
      [](double marginal_clean, double conditional_clean) {
        WeightModel wm;
        wm.marginal_clean = marginal_clean;
        wm.oracle = true;
        wm.conditional_raw = [conditional_clean](const std::vector<double>&) {
          return conditional_clean;
        };
        return likelihood_ratio(wm, {0.0});
      },
      py::arg("marginal_clean"), py::arg("conditional_clean"));

  // Synthetic data: returns a dict of columns.
  m.def(
      "gen_synthetic",
      [](int n, std::uint64_t seed, double target_corruption_mean) {
        SynthConfig cfg;
        cfg.n = n;
        cfg.seed = seed;
        cfg.target_corruption_mean = target_corruption_mean;
        const auto synth = gen_synthetic(cfg);
        py::dict out;
        Rows x;
        std::vector<double> z;
        for (const auto& s : synth.data.samples) {
          x.push_back(s.x_obs);
          z.push_back(s.z[0]);
        }
        out["x"] = x;
        out["z"] = z;
        out["y"] = synth.data.ground_truth_y;
        out["probs"] = synth.probs;
        return out;
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("target_corruption_mean") = 0.20);
  m.def(
      "corruption_probabilities",
      [](const std::vector<double>& initial, double target_mean) {
        return corruption_probabilities(initial, target_mean).probs;
      },
      py::arg("initial"), py::arg("target_mean") = 0.20);

  // Experiment harness: run_experiment(**config_overrides) -> list of dicts.
  m.def("run_experiment", [](const py::kwargs& kwargs) {
    const auto rows = run_experiment(config_from_kwargs(kwargs));
    py::list out;
    for (const auto& r : rows) out.append(row_to_dict(r));
    return out;
  });
  m.def(
      "ablate_beta",
      [](const std::vector<double>& betas, const py::kwargs& kwargs) {
        const auto rows = ablate_beta(config_from_kwargs(kwargs), betas);
        py::list out;
        for (const auto& r : rows) out.append(row_to_dict(r));
        return out;
      },
      py::arg("betas"));
  m.def("selfcheck", []() {
    std::ostringstream os;
    const bool ok = selfcheck(os);
    return py::make_tuple(ok, os.str());
  });
}
