"""Input validation helpers for array-shaped effect-size corpora."""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np
from sklearn.utils import check_array

from .errors import DataError


def effect_noise_arrays(X, se2=None, heteroscedastic: bool = True,
                        ) -> Tuple[np.ndarray, np.ndarray]:
    """Normalize estimator input into ``(effects, noise_vars)`` float arrays.

    Accepted forms: a 1-D array of effects (optionally with ``se2`` given
    separately), an ``(m, 1)`` column of effects, or an ``(m, 2)`` matrix
    whose columns are ``[effect, noise_var]``.  With
    ``heteroscedastic=False`` any supplied noise variances are replaced by
    zeros (the plain-mixture reduction); with ``heteroscedastic=True`` the
    noise variances must be supplied one way or the other.
    """
    X = check_array(X, ensure_2d=False, dtype=np.float64, ensure_all_finite=False)
    if X.ndim == 1:
        d = X
    elif X.ndim == 2 and X.shape[1] == 1:
        d = X[:, 0]
    elif X.ndim == 2 and X.shape[1] == 2:
        if se2 is not None:
            raise DataError("noise variances supplied both in X[:, 1] and as se2")
        d = X[:, 0]
        se2 = X[:, 1]
    else:
        raise DataError("X must be 1-D, (m, 1), or (m, 2); got shape %r" % (X.shape,))

    if np.any(~np.isfinite(d)):
        raise DataError("observed effects must be finite (NaN or inf found)")

    m = d.shape[0]
    if not heteroscedastic:
        return d, np.zeros(m)
    if se2 is None:
        raise DataError(
            "heteroscedastic fit requires per-observation noise variances: "
            "pass X with columns [effect, noise_var] or the se2 argument"
        )
    se2 = np.asarray(se2, dtype=np.float64).ravel()
    if se2.shape[0] != m:
        raise DataError("se2 length %d does not match %d observations" % (se2.shape[0], m))
    if np.any(~np.isfinite(se2)) or np.any(se2 < 0):
        raise DataError("noise variances must be finite and non-negative")
    return d, se2


def check_in_unit_interval(name: str, value: float) -> float:
    if not 0.0 < value < 1.0:
        raise ValueError("%s must lie strictly inside (0, 1), got %g" % (name, value))
    return float(value)
