"""Effect-size priors for experiment power planning.

Estimates the assumed effect size (AES) a team should plug into power
calculations, learned from a corpus of past experiments: a noise-aware
Gaussian-mixture estimator with simpler baselines, a reward model that picks
the AES by simulated payoff, corpus simulators, and an evaluation harness.
"""

from .errors import ConfigError, DataError, EstimationError, NumericalError
from .io import read_corpus, write_corpus_csv, write_corpus_json
from .mixture import (EffectSizeGMM, FitConfig, FitDiagnostics, MixtureParams,
                      PooledParams, extract_aes, fit_mixture, fit_pooled,
                      penalized_loglik)
from .records import (ArmWeekly, ExperimentRecord, PowerPolicy, CONTROL,
                      LABEL_FLAT, LABEL_NEGATIVE, LABEL_POSITIVE, RULE_WELCH,
                      RULE_Z, TREATMENT)
from .simulate import (AccuracySimConfig, TrajectorySimConfig,
                       simulate_accuracy_corpus, simulate_trajectory_corpus)
from .stats import (DurationResult, WelchResult, ZDecision, normal_cdf,
                    normal_quantile, power, recommend_duration, student_t_cdf,
                    student_t_sf, welch_test, z_decision)
from .utility import (RewardBreakdown, UtilityConfig, evaluate_reward,
                      launch_impact_u2, optimize_aes)
from .evaluation import (AccuracyReport, EvaluationReport, MethodRow,
                         run_accuracy_study, run_comparison)

__version__ = "0.1.0"

__all__ = [
    "AccuracyReport", "AccuracySimConfig", "ArmWeekly", "ConfigError",
    "CONTROL", "DataError", "DurationResult", "EffectSizeGMM",
    "EstimationError", "EvaluationReport", "ExperimentRecord", "FitConfig",
    "FitDiagnostics", "LABEL_FLAT", "LABEL_NEGATIVE", "LABEL_POSITIVE",
    "MethodRow", "MixtureParams", "NumericalError", "PooledParams",
    "PowerPolicy", "RewardBreakdown", "RULE_WELCH", "RULE_Z",
    "TrajectorySimConfig", "TREATMENT", "UtilityConfig", "WelchResult",
    "ZDecision", "evaluate_reward", "extract_aes", "fit_mixture",
    "fit_pooled", "launch_impact_u2", "normal_cdf", "normal_quantile",
    "optimize_aes", "penalized_loglik", "power", "read_corpus",
    "recommend_duration", "run_accuracy_study", "run_comparison",
    "simulate_accuracy_corpus", "simulate_trajectory_corpus", "student_t_cdf",
    "student_t_sf", "welch_test", "write_corpus_csv", "write_corpus_json",
    "z_decision", "__version__",
]
