"""Statistical primitives: normal/Student-t tails, power, duration, decisions.

Frequentist power for the one-sided mean-difference test is
``power(delta, se, alpha) = Phi(z_alpha + delta/se)`` with
``z_alpha = Phi^{-1}(alpha)``; the sign convention makes ``power(0) = alpha``
equal the test size exactly.  Launch decisions use a strict ``p < alpha``
threshold together with a positive observed effect.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import special

from .errors import DataError
from .records import ExperimentRecord, PowerPolicy

__all__ = [
    "normal_cdf", "normal_quantile", "power", "student_t_cdf", "student_t_sf",
    "welch_test", "z_decision", "recommend_duration",
    "WelchResult", "ZDecision", "DurationResult",
]

_SQRT2 = math.sqrt(2.0)


def normal_cdf(x: float) -> float:
    """Standard normal CDF ``Phi(x)``, accurate in both tails."""
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_quantile(q: float) -> float:
    """Standard normal quantile ``Phi^{-1}(q)`` for q strictly inside (0, 1)."""
    if not 0.0 < q < 1.0:
        raise ValueError("quantile argument must lie strictly inside (0, 1), got %g" % q)
    return float(special.ndtri(q))


def power(delta: float, se: float, alpha: float) -> float:
    """One-sided frequentist power at effect size ``delta``.

    Parameters
    ----------
    delta : float
        Assumed effect size.
    se : float
        Standard error of the mean difference, ``sqrt(var_T/n_T + var_C/n_C)``.
    alpha : float
        Type I error of the one-sided test.

    Returns
    -------
    float
        ``Phi(Phi^{-1}(alpha) + delta/se)``.
    """
    if se <= 0.0:
        raise ValueError("se must be positive, got %g" % se)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1), got %g" % alpha)
    return normal_cdf(normal_quantile(alpha) + delta / se)


def student_t_sf(t: float, df: float) -> float:
    """Upper-tail probability of Student's t, via the regularized incomplete beta.

    ``P(T > t) = I_x(df/2, 1/2) / 2`` with ``x = df/(df + t^2)`` for t >= 0,
    and the symmetric complement for t < 0.
    """
    if df <= 0.0:
        raise ValueError("df must be positive, got %g" % df)
    x = df / (df + t * t)
    half_tail = 0.5 * float(special.betainc(0.5 * df, 0.5, x))
    return half_tail if t >= 0.0 else 1.0 - half_tail


def student_t_cdf(t: float, df: float) -> float:
    """Student-t CDF with ``df`` degrees of freedom."""
    return 1.0 - student_t_sf(t, df)


class WelchResult(NamedTuple):
    t_stat: float
    df: float
    p_value: float
    launch: bool


def welch_test(mean_t: float, var_t: float, n_t: int,
               mean_c: float, var_c: float, n_c: int,
               alpha: float) -> WelchResult:
    """One-sided two-group Welch's t-test with launch decision.

    Tests treatment > control; ``launch`` is True when the one-sided p-value
    is strictly below ``alpha`` and the observed difference is positive.
    """
    if n_t < 2 or n_c < 2:
        raise ValueError("each arm needs n >= 2, got n_t=%d n_c=%d" % (n_t, n_c))
    if var_t < 0.0 or var_c < 0.0:
        raise ValueError("variances must be non-negative")
    if var_t == 0.0 and var_c == 0.0:
        raise ValueError("at least one arm variance must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1), got %g" % alpha)

    wt = var_t / n_t
    wc = var_c / n_c
    se2 = wt + wc
    t_stat = (mean_t - mean_c) / math.sqrt(se2)
    # Welch-Satterthwaite degrees of freedom
    df = se2 * se2 / (wt * wt / (n_t - 1) + wc * wc / (n_c - 1))
    p_value = student_t_sf(t_stat, df)
    launch = p_value < alpha and mean_t > mean_c
    return WelchResult(t_stat=t_stat, df=df, p_value=p_value, launch=launch)


class ZDecision(NamedTuple):
    z: float
    p_value: float
    launch: bool


def z_decision(d: float, se2: float, alpha: float) -> ZDecision:
    """Known-variance one-sided decision rule on an observed effect size.

    Used for corpora that carry only ``(d, se2)`` per week and no raw arm
    outcomes, consistent with the normal sampling model of the effect.
    """
    if se2 <= 0.0:
        raise ValueError("se2 must be positive, got %g" % se2)
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1), got %g" % alpha)
    z = d / math.sqrt(se2)
    p_value = normal_cdf(-z)
    launch = p_value < alpha and d > 0.0
    return ZDecision(z=z, p_value=p_value, launch=launch)


class DurationResult(NamedTuple):
    weeks: int
    attained: bool


def recommend_duration(exp: ExperimentRecord, aes: float,
                       policy: PowerPolicy) -> DurationResult:
    """Smallest week at which power at ``aes`` reaches the policy target.

    Scans weeks ``1..policy.max_weeks`` using the experiment's weekly effect
    variances.  When no week reaches the target, returns
    ``(policy.max_weeks, attained=False)``; the recommendation is monotone
    non-increasing in ``aes``.
    """
    if aes <= 0.0:
        raise ValueError("aes must be positive, got %g" % aes)
    if exp.weeks < policy.max_weeks:
        raise DataError(
            "experiment %r: missing weekly variance for week %d"
            % (exp.id, exp.weeks + 1)
        )
    z_alpha = normal_quantile(policy.alpha)
    for t in range(1, policy.max_weeks + 1):
        se2 = exp.effect_se2[t - 1]
        if not np.isfinite(se2) or se2 <= 0.0:
            raise DataError("experiment %r: invalid effect_se2 at week %d" % (exp.id, t))
        if normal_cdf(z_alpha + aes / math.sqrt(se2)) >= policy.target_power:
            return DurationResult(weeks=t, attained=True)
    return DurationResult(weeks=policy.max_weeks, attained=False)
