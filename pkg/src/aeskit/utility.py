"""Decision-theoretic AES selection: per-experiment rewards, grid search.

The reward of running experiment ``i`` for its recommended duration
``T_i(aes)`` has three parts: the opportunity cost of the weeks beyond the
first, the impact accumulated on treated customers during the experiment,
and — when the launch rule fires on week-``T`` data — the projected impact
of launching to all triggered customers over the remaining horizon.
Maximizing the corpus-average reward over a grid of candidate AES values
yields the utility-based recommendation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DataError
from .records import ExperimentRecord, PowerPolicy, RULE_WELCH
from .stats import recommend_duration, welch_test, z_decision

EFFECT_SOURCE_FINAL_WEEK = "final_week_observed"

DEFAULT_GRID = tuple(np.round(np.arange(1, 51) * 0.1, 10))


@dataclass(frozen=True)
class UtilityConfig:
    """Settings for reward evaluation and the AES grid search.

    ``horizon_weeks`` is the post-launch accounting horizon; ``grid`` the
    candidate AES values (strictly increasing, all positive);
    ``posterior_effect_source`` fixes which observed effect stands in for
    the true effect when projecting impact (currently only the final
    recorded week's estimate).
    """

    horizon_weeks: int = 52
    grid: Tuple[float, ...] = DEFAULT_GRID
    policy: PowerPolicy = field(default_factory=PowerPolicy)
    posterior_effect_source: str = EFFECT_SOURCE_FINAL_WEEK

    def __post_init__(self):
        if self.horizon_weeks < 1:
            raise ConfigError("horizon_weeks must be >= 1, got %d" % self.horizon_weeks)
        grid = tuple(float(g) for g in self.grid)
        if len(grid) == 0:
            raise ConfigError("grid must be non-empty")
        if any(g <= 0 for g in grid):
            raise ConfigError("grid values must be strictly positive")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        if self.posterior_effect_source != EFFECT_SOURCE_FINAL_WEEK:
            raise ConfigError("unknown posterior_effect_source %r"
                              % (self.posterior_effect_source,))


@dataclass
class RewardBreakdown:
    """Reward decomposition for one experiment at one candidate AES."""

    experiment_id: str
    duration: int
    opportunity_cost: float
    in_experiment_impact: float
    launch_impact: float
    total: float
    launched: bool


def launch_impact_u2(d_prime: float, horizon_weeks: int, t: int,
                     n_total: int) -> float:
    """Projected post-launch impact: effect x remaining weeks x reached customers."""
    if not 1 <= t <= horizon_weeks:
        raise ValueError("week t=%d outside [1, horizon=%d]" % (t, horizon_weeks))
    if n_total < 0:
        raise ValueError("n_total must be non-negative, got %d" % n_total)
    return d_prime * (horizon_weeks - t) * n_total


def launch_decision(exp: ExperimentRecord, week: int, policy: PowerPolicy) -> bool:
    """Apply the policy's launch rule to data available at ``week``.

    The two-sample rule needs per-arm summaries; records carrying only an
    effect and its variance fall back to the one-sided z decision, so mixed
    corpora evaluate without configuration.
    """
    i = week - 1
    if policy.decision_rule == RULE_WELCH and exp.has_arm_summaries:
        return welch_test(
            float(exp.treatment.cumulative_mean[i]),
            float(exp.treatment.cumulative_var[i]),
            int(exp.treatment.cumulative_n[i]),
            float(exp.control.cumulative_mean[i]),
            float(exp.control.cumulative_var[i]),
            int(exp.control.cumulative_n[i]),
            policy.alpha).launch
    return z_decision(float(exp.observed_effect[i]),
                      float(exp.effect_se2[i]), policy.alpha).launch


def evaluate_reward(exp: ExperimentRecord, aes: float,
                    cfg: UtilityConfig) -> RewardBreakdown:
    """Reward of running ``exp`` for its recommended duration at ``aes``.

    The duration comes from the power rule; the launch decision is made on
    the data available at that week.  The effect used to project impact is
    the final recorded week's observed effect — the best available guess at
    the true effect — regardless of how early the experiment stops.
    """
    if exp.observed_effect.size == 0:
        raise DataError("experiment %r: no observed effects recorded" % exp.id)
    duration = recommend_duration(exp, aes, cfg.policy).weeks
    d_prime = exp.final_effect
    opportunity_cost = -exp.weekly_cost * (duration - 1)
    if exp.has_arms:
        n_treat = int(exp.treatment.cumulative_n[duration - 1])
        n_total = n_treat + int(exp.control.cumulative_n[duration - 1])
    else:
        raise DataError(
            "experiment %r: reward evaluation needs arm trajectories" % exp.id)
    in_experiment = d_prime * n_treat
    launched = launch_decision(exp, duration, cfg.policy)
    launch_value = (launch_impact_u2(d_prime, cfg.horizon_weeks, duration, n_total)
                    if launched else 0.0)
    total = opportunity_cost + in_experiment + launch_value
    return RewardBreakdown(
        experiment_id=exp.id, duration=duration,
        opportunity_cost=opportunity_cost, in_experiment_impact=in_experiment,
        launch_impact=launch_value, total=total, launched=launched)


def optimize_aes(corpus: Sequence[ExperimentRecord], cfg: UtilityConfig,
                 ) -> Tuple[float, List[Tuple[float, float]]]:
    """Grid-search the AES maximizing the corpus-average reward.

    Returns the argmax (ties broken toward the smallest candidate, i.e.
    toward longer, safer experiments) and the full ``(aes, mean_reward)``
    profile.  Experiments contribute in corpus order, so the result does not
    depend on evaluation scheduling.
    """
    if len(corpus) == 0:
        raise ConfigError("corpus is empty")
    profile: List[Tuple[float, float]] = []
    best_aes = None
    best_reward = -np.inf
    for aes in cfg.grid:
        total = 0.0
        for exp in corpus:
            total += evaluate_reward(exp, aes, cfg).total
        mean_reward = total / len(corpus)
        profile.append((aes, mean_reward))
        if mean_reward > best_reward:
            best_aes, best_reward = aes, mean_reward
    return float(best_aes), profile
