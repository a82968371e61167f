"""Prediction sets with coverage guarantees under corrupted training data.

Thin wrapper over the C++ core. Thresholds cross the boundary as
float-or-None, where None is the infinity sentinel (the inverted set is the
whole space).
"""

try:
    from ._privcal import *  # noqa: F401,F403  (installed package layout)
except ImportError:  # in-tree builds put the extension on sys.path directly
    from _privcal import *  # type: ignore # noqa: F401,F403

__all__ = [
    "weighted_quantile",
    "weighted_quantile_oracle",
    "cp_quantile",
    "abs_residual",
    "cqr_score",
    "hps_score",
    "invert_cqr",
    "invert_abs_residual",
    "invert_hps",
    "calibrate_naive",
    "calibrate_wcp",
    "calibrate_pcp",
    "loo_pcp_predict",
    "estimate_marginal_clean_rate",
    "likelihood_ratio_from_probs",
    "gen_synthetic",
    "corruption_probabilities",
    "run_experiment",
    "ablate_beta",
    "selfcheck",
    "PredictionSet",
]
