"""Core data model: per-arm weekly summaries, experiment records, power policy.

An :class:`ExperimentRecord` holds one historical experiment as weekly
cumulative summaries: triggered-customer counts (and optionally outcome
means/variances) per arm, together with the weekly observed effect size and
its known sampling variance.  All weekly arrays are indexed ``t = 1..weeks``
and stored 0-based (entry 0 is week 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, DataError

TREATMENT = "treatment"
CONTROL = "control"

LABEL_POSITIVE = "positive"
LABEL_FLAT = "flat"
LABEL_NEGATIVE = "negative"
LATENT_LABELS = (LABEL_POSITIVE, LABEL_FLAT, LABEL_NEGATIVE)

RULE_WELCH = "welch"
RULE_Z = "z"
DECISION_RULES = (RULE_WELCH, RULE_Z)


@dataclass
class ArmWeekly:
    """Weekly cumulative summaries for one experiment arm.

    Parameters
    ----------
    arm : str
        Either ``"treatment"`` or ``"control"``.
    cumulative_n : array of int
        Customers triggered up to week t; must be non-decreasing.
    cumulative_mean : array of float, optional
        Sample mean of the outcome over triggered customers up to week t.
    cumulative_var : array of float, optional
        Sample variance of the outcome up to week t; non-negative.
    """

    arm: str
    cumulative_n: np.ndarray
    cumulative_mean: Optional[np.ndarray] = None
    cumulative_var: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.arm not in (TREATMENT, CONTROL):
            raise DataError("arm must be %r or %r, got %r" % (TREATMENT, CONTROL, self.arm))
        self.cumulative_n = np.asarray(self.cumulative_n, dtype=np.int64)
        if self.cumulative_mean is not None:
            self.cumulative_mean = np.asarray(self.cumulative_mean, dtype=float)
        if self.cumulative_var is not None:
            self.cumulative_var = np.asarray(self.cumulative_var, dtype=float)

    @property
    def has_summaries(self) -> bool:
        return self.cumulative_mean is not None and self.cumulative_var is not None

    def validate(self, weeks: int) -> None:
        if self.cumulative_n.shape != (weeks,):
            raise DataError(
                "arm %r: cumulative_n has %d weeks, expected %d"
                % (self.arm, self.cumulative_n.size, weeks)
            )
        if np.any(self.cumulative_n <= 0):
            raise DataError("arm %r: cumulative_n must be positive" % self.arm)
        if np.any(np.diff(self.cumulative_n) < 0):
            raise DataError("arm %r: cumulative_n must be non-decreasing" % self.arm)
        for name, arr in (("cumulative_mean", self.cumulative_mean),
                          ("cumulative_var", self.cumulative_var)):
            if arr is not None and arr.shape != (weeks,):
                raise DataError("arm %r: %s has wrong length" % (self.arm, name))
        if self.cumulative_var is not None and np.any(self.cumulative_var < 0):
            raise DataError("arm %r: cumulative_var must be non-negative" % self.arm)


@dataclass
class ExperimentRecord:
    """One historical experiment with weekly cumulative trajectories.

    ``observed_effect[t-1]`` is the observed effect size using data up to
    week t (the treatment-minus-control mean difference or any
    pre-standardized analogue); ``effect_se2[t-1]`` is its known sampling
    variance.  Arm trajectories are optional: a cross-sectional corpus may
    carry only the effect and its variance.  ``weekly_cost`` is the per-week
    opportunity cost of keeping the experiment running.  ``latent_label``
    records the ground-truth cluster for simulated data and is absent for
    real corpora.
    """

    id: str
    weeks: int
    observed_effect: np.ndarray
    effect_se2: np.ndarray
    treatment: Optional[ArmWeekly] = None
    control: Optional[ArmWeekly] = None
    weekly_cost: float = 0.0
    latent_label: Optional[str] = None

    def __post_init__(self):
        self.observed_effect = np.asarray(self.observed_effect, dtype=float)
        self.effect_se2 = np.asarray(self.effect_se2, dtype=float)

    @property
    def has_arms(self) -> bool:
        """True when the record carries per-arm cumulative trajectories."""
        return self.treatment is not None and self.control is not None

    @property
    def has_arm_summaries(self) -> bool:
        """True when both arms carry outcome means and variances."""
        return (self.has_arms and self.treatment.has_summaries
                and self.control.has_summaries)

    @property
    def final_effect(self) -> float:
        """Observed effect size at the last recorded week."""
        return float(self.observed_effect[-1])

    @property
    def final_se2(self) -> float:
        return float(self.effect_se2[-1])

    def validate(self) -> None:
        """Check all record invariants; raise :class:`DataError` on violation."""
        if self.weeks < 1:
            raise DataError("experiment %r: weeks must be positive" % self.id)
        if (self.treatment is None) != (self.control is None):
            raise DataError("experiment %r: arms must be both present or both absent"
                            % self.id)
        if self.has_arms:
            if self.treatment.arm != TREATMENT or self.control.arm != CONTROL:
                raise DataError("experiment %r: arms mislabeled" % self.id)
            self.treatment.validate(self.weeks)
            self.control.validate(self.weeks)
        for name, arr in (("observed_effect", self.observed_effect),
                          ("effect_se2", self.effect_se2)):
            if arr.shape != (self.weeks,):
                raise DataError("experiment %r: %s has wrong length" % (self.id, name))
        if np.any(~np.isfinite(self.observed_effect)):
            raise DataError("experiment %r: observed_effect must be finite" % self.id)
        if np.any(self.effect_se2 <= 0) or np.any(~np.isfinite(self.effect_se2)):
            raise DataError("experiment %r: effect_se2 must be positive" % self.id)
        if self.weekly_cost < 0:
            raise DataError("experiment %r: weekly_cost must be non-negative" % self.id)
        if self.latent_label is not None and self.latent_label not in LATENT_LABELS:
            raise DataError("experiment %r: unknown latent_label %r" % (self.id, self.latent_label))
        self._check_se2_consistency()

    def _check_se2_consistency(self, rtol: float = 1e-9) -> None:
        # When both arms carry variances, the stored effect_se2 must equal
        # var_T/n_T + var_C/n_C (the known-variance sampling model).
        if not self.has_arm_summaries:
            return
        implied = (self.treatment.cumulative_var / self.treatment.cumulative_n
                   + self.control.cumulative_var / self.control.cumulative_n)
        bad = ~np.isclose(self.effect_se2, implied, rtol=rtol, atol=0.0)
        if np.any(bad):
            week = int(np.argmax(bad)) + 1
            raise DataError(
                "experiment %r: effect_se2 inconsistent with arm summaries at week %d "
                "(stored %g, implied %g)"
                % (self.id, week, self.effect_se2[week - 1], implied[week - 1])
            )


@dataclass
class PowerPolicy:
    """Duration/decision policy: test size, target power, horizon, rule.

    ``decision_rule`` selects how launch calls are made: ``"welch"`` runs a
    one-sided two-group Welch's t-test on the arm summaries; ``"z"`` applies
    the known-variance normal rule directly to (effect, effect_se2) and is
    the only option for corpora without raw arm summaries.
    """

    alpha: float = 0.05
    target_power: float = 0.80
    max_weeks: int = 4
    decision_rule: str = RULE_WELCH

    def __post_init__(self):
        if not (0.0 < self.alpha < self.target_power < 1.0):
            raise ConfigError(
                "require 0 < alpha < target_power < 1, got alpha=%g target_power=%g"
                % (self.alpha, self.target_power)
            )
        if self.max_weeks < 1:
            raise ConfigError("max_weeks must be a positive integer")
        if self.decision_rule not in DECISION_RULES:
            raise ConfigError(
                "decision_rule must be one of %r, got %r" % (DECISION_RULES, self.decision_rule)
            )
