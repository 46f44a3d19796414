"""Gaussian mixture estimation for noisy effect-size corpora.

Observed effects are modelled as draws from a K-component Gaussian mixture
in which observation ``i`` carries its own known measurement variance: under
component ``k`` the density of ``d_i`` is ``N(mu_k, tau2_k + se2_i)``.
Fitting is by EM with an optional penalty on the component variances that
keeps every ``tau2_k`` away from zero, so degenerate spikes on single
observations cannot win the likelihood race.

Three entry points matter to callers:

- :func:`fit_mixture` — the functional core (multi-start penalized EM),
- :class:`EffectSizeGMM` — a scikit-learn style estimator wrapping it,
- :func:`fit_pooled` — the single-population random-effects MLE, solved by
  profile likelihood rather than EM so the two routes check each other.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.special import logsumexp
from sklearn.base import BaseEstimator
from sklearn.cluster import KMeans
from sklearn.exceptions import NotFittedError

from .errors import ConfigError, DataError, EstimationError, NumericalError
from .validation import effect_noise_arrays

_LOG_2PI = math.log(2.0 * math.pi)

# The zero-mean ("flat") component is pinned at this position whenever the
# pin is active; relabeling keeps it there and orders the rest around it.
_FLAT_INDEX = 1

_SCAN_POINTS = 24
_MAX_BRACKET_EXPANSIONS = 3
_MAX_INNER_ROUNDS = 100


@dataclass(frozen=True)
class FitConfig:
    """Knobs for the mixture EM.

    ``fix_flat_mean=None`` resolves to ``True`` exactly when ``K == 3`` —
    the positive/flat/negative reading of the components only makes sense
    there by default, but callers may force the pin on or off.
    """

    K: int = 3
    fix_flat_mean: Optional[bool] = None
    heteroscedastic: bool = True
    penalized: bool = True
    tolerance: float = 1e-3
    max_iterations: int = 500
    n_starts: int = 10
    kmeans_start: bool = True
    inner_tolerance: float = 1e-8
    var_floor: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ConfigError("K must be >= 1, got %d" % self.K)
        if self.tolerance <= 0:
            raise ConfigError("tolerance must be positive, got %g" % self.tolerance)
        if self.inner_tolerance <= 0:
            raise ConfigError("inner_tolerance must be positive, got %g" % self.inner_tolerance)
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1, got %d" % self.max_iterations)
        if self.n_starts < 1:
            raise ConfigError("n_starts must be >= 1, got %d" % self.n_starts)
        if self.var_floor <= 0:
            raise ConfigError("var_floor must be positive, got %g" % self.var_floor)
        if self.pin_flat and self.K < 2:
            raise ConfigError("fix_flat_mean requires K >= 2, got K=%d" % self.K)

    @property
    def pin_flat(self) -> bool:
        if self.fix_flat_mean is None:
            return self.K == 3
        return bool(self.fix_flat_mean)


@dataclass
class MixtureParams:
    """Fitted (or candidate) mixture parameters.

    ``comp_vars`` holds the between-experiment variances ``tau2_k``; the
    per-observation measurement variances live with the data, not here.
    """

    K: int
    weights: np.ndarray
    means: np.ndarray
    comp_vars: np.ndarray
    penalized_loglik: float = float("nan")
    n_iterations: int = 0
    converged: bool = False

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        self.means = np.asarray(self.means, dtype=np.float64).ravel()
        self.comp_vars = np.asarray(self.comp_vars, dtype=np.float64).ravel()

    def validate(self):
        for name, arr in (("weights", self.weights), ("means", self.means),
                          ("comp_vars", self.comp_vars)):
            if arr.shape != (self.K,):
                raise DataError("%s must have shape (%d,), got %r" % (name, self.K, arr.shape))
            if np.any(~np.isfinite(arr)):
                raise DataError("%s contains non-finite values" % name)
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise DataError("weights must be non-negative and sum to 1")
        if np.any(self.comp_vars <= 0):
            raise DataError("component variances must be strictly positive")

    def copy(self) -> "MixtureParams":
        return MixtureParams(self.K, self.weights.copy(), self.means.copy(),
                             self.comp_vars.copy(), self.penalized_loglik,
                             self.n_iterations, self.converged)


@dataclass
class FitDiagnostics:
    """Per-start bookkeeping from a multi-start fit."""

    best_start: int
    start_loglik: List[float]
    start_converged: List[bool]
    start_n_iterations: List[int]
    start_init: List[str]
    loglik_trace: np.ndarray = field(default_factory=lambda: np.empty(0))


class PooledParams(NamedTuple):
    mu0: float
    tau2: float
    loglik: float


# ---------------------------------------------------------------------------
# densities, E-step, objective


def component_density(d: float, se2: float, mu: float, tau2: float) -> float:
    """Density of one observation under one component, ``N(mu, tau2 + se2)``."""
    total = tau2 + se2
    if total <= 0:
        raise ValueError("total variance must be positive, got %g" % total)
    z = (d - mu) ** 2 / total
    return math.exp(-0.5 * (_LOG_2PI + math.log(total) + z))


def _log_densities(d: np.ndarray, se2: np.ndarray, means: np.ndarray,
                   comp_vars: np.ndarray) -> np.ndarray:
    # (m, K): log N(d_i; mu_k, tau2_k + se2_i)
    total = se2[:, None] + comp_vars[None, :]
    z = (d[:, None] - means[None, :]) ** 2 / total
    return -0.5 * (_LOG_2PI + np.log(total) + z)


def _variance_penalty(comp_vars: np.ndarray, m: int) -> float:
    return -(1.0 / m) * float(np.sum(1.0 / comp_vars + np.log(comp_vars)))


def penalized_loglik(d: np.ndarray, se2: np.ndarray, params: MixtureParams,
                     penalized: bool = True) -> float:
    """Marginal log-likelihood, minus the variance penalty when enabled."""
    logf = _log_densities(d, se2, params.means, params.comp_vars)
    with np.errstate(divide="ignore"):
        logw = np.log(params.weights)
    ll = float(np.sum(logsumexp(logf + logw[None, :], axis=1)))
    if penalized:
        ll += _variance_penalty(params.comp_vars, d.shape[0])
    return ll


def e_step(d: np.ndarray, se2: np.ndarray, params: MixtureParams) -> np.ndarray:
    """Posterior component responsibilities, one row per observation."""
    d = np.asarray(d, dtype=np.float64)
    if np.any(np.isnan(d)):
        raise DataError("observed effects contain NaN")
    logf = _log_densities(d, se2, params.means, params.comp_vars)
    with np.errstate(divide="ignore"):
        a = logf + np.log(params.weights)[None, :]
    resp = np.exp(a - logsumexp(a, axis=1)[:, None])
    # exact row-normalization so downstream sums hold to ~1e-16
    resp /= resp.sum(axis=1, keepdims=True)
    return resp


# ---------------------------------------------------------------------------
# M-step


def _tau2_gradient_grid(grid: np.ndarray, se2: np.ndarray, w: np.ndarray,
                        r2: np.ndarray, m: int, penalized: bool) -> np.ndarray:
    total = se2[None, :] + grid[:, None]          # (n, m)
    a = ((w * r2)[None, :] / (total * total)).sum(axis=1)
    b = (w[None, :] / total).sum(axis=1)
    g = 0.5 * (a - b)
    if penalized:
        g += (1.0 / m) * (1.0 / (grid * grid) - 1.0 / grid)
    return g


def _maximize_tau2(d: np.ndarray, se2: np.ndarray, w: np.ndarray, mu: float,
                   v_cur: float, cfg: FitConfig, var_d: float, comp_index: int) -> float:
    """One-dimensional ascent step in a component variance.

    Solves the stationarity condition of the per-component objective on the
    bracket ``[var_floor, 10 * Var(d)]`` (upper end expanded tenfold up to
    three times when the gradient is still positive there), then keeps the
    candidate only if it does not decrease the objective — so the enclosing
    EM iteration can never descend.
    """
    m = d.shape[0]
    r2 = (d - mu) ** 2
    lo = cfg.var_floor
    hi = 10.0 * var_d if var_d > 0 else 10.0
    hi = max(hi, 10.0 * lo)

    def gradient(v: float) -> float:
        return float(_tau2_gradient_grid(np.array([v]), se2, w, r2, m, cfg.penalized)[0])

    def objective(v: float) -> float:
        total = se2 + v
        val = -0.5 * float(np.sum(w * (_LOG_2PI + np.log(total) + r2 / total)))
        if cfg.penalized:
            val -= (1.0 / m) * (1.0 / v + math.log(v))
        return val

    g_lo = gradient(lo)
    g_hi = gradient(hi)
    roots: List[float] = []
    if g_lo > 0 and g_hi < 0:
        # the common shape: one sign change across the whole bracket
        roots.append(float(optimize.brentq(gradient, lo, hi, xtol=1e-15)))
    best_root_ok = bool(roots) and objective(roots[0]) >= objective(v_cur)
    if not best_root_ok:
        # scan for sign changes, expanding the bracket while the gradient
        # stays positive at the upper end
        for _ in range(_MAX_BRACKET_EXPANSIONS + 1):
            grid = np.geomspace(lo, hi, _SCAN_POINTS)
            g = _tau2_gradient_grid(grid, se2, w, r2, m, cfg.penalized)
            if g[-1] <= 0:
                break
            hi *= 10.0
        else:
            raise NumericalError(
                "component %d: variance stationarity not bracketed below %g"
                % (comp_index, hi))
        roots = []
        for i in range(len(grid) - 1):
            if g[i] == 0.0:
                roots.append(float(grid[i]))
            elif (g[i] > 0) != (g[i + 1] > 0):
                roots.append(float(optimize.brentq(gradient, grid[i], grid[i + 1],
                                                   xtol=1e-15)))
        if g[-1] == 0.0:
            roots.append(float(grid[-1]))

    candidates = roots + [lo]
    best_v, best_obj = v_cur, objective(v_cur)
    for v in candidates:
        obj = objective(v)
        if obj > best_obj:
            best_v, best_obj = v, obj
    return float(best_v)


def _solve_component(d: np.ndarray, se2: np.ndarray, w: np.ndarray, mu: float,
                     v: float, pinned: bool, cfg: FitConfig, var_d: float,
                     comp_index: int) -> Tuple[float, float]:
    # coordinate ascent in (mu, tau2): exact precision-weighted mean, then
    # the guarded variance step, until neither moves
    for _ in range(_MAX_INNER_ROUNDS):
        if pinned:
            mu_new = 0.0
        else:
            prec = w / (se2 + v)
            denom = float(prec.sum())
            mu_new = float(prec @ d) / denom if denom > 0 else mu
        v_new = _maximize_tau2(d, se2, w, mu_new, v, cfg, var_d, comp_index)
        done = abs(mu_new - mu) < cfg.inner_tolerance and abs(v_new - v) < cfg.inner_tolerance
        mu, v = mu_new, v_new
        if done:
            break
    return mu, v


def m_step(d: np.ndarray, se2: np.ndarray, resp: np.ndarray,
           prev: MixtureParams, cfg: FitConfig) -> MixtureParams:
    """One EM maximization step given responsibilities ``resp``."""
    m = d.shape[0]
    weights = resp.mean(axis=0)
    weights = weights / weights.sum()
    means = prev.means.copy()
    comp_vars = prev.comp_vars.copy()
    var_d = float(np.var(d))
    for j in range(prev.K):
        pinned = cfg.pin_flat and j == _FLAT_INDEX
        means[j], comp_vars[j] = _solve_component(
            d, se2, resp[:, j], means[j], comp_vars[j], pinned, cfg, var_d, j)
    return MixtureParams(prev.K, weights, means, comp_vars,
                         n_iterations=prev.n_iterations)


# ---------------------------------------------------------------------------
# initialization


def _order_means(means: np.ndarray, weights: np.ndarray, comp_vars: np.ndarray,
                 pin_flat: bool) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    K = means.shape[0]
    if pin_flat:
        free = [k for k in range(K) if k != _FLAT_INDEX]
        free.sort(key=lambda k: -means[k])
        perm = np.empty(K, dtype=np.intp)
        perm[_FLAT_INDEX] = _FLAT_INDEX
        slots = [p for p in range(K) if p != _FLAT_INDEX]
        for pos, k in zip(slots, free):
            perm[pos] = k
    else:
        perm = np.argsort(-means, kind="stable")
    return means[perm], weights[perm], comp_vars[perm], perm


def _random_init(d: np.ndarray, var_d: float, cfg: FitConfig,
                 rng: np.random.Generator) -> MixtureParams:
    K = cfg.K
    qs = rng.uniform(0.0, 1.0, size=K)
    means = np.quantile(d, qs)
    scale = var_d if var_d > 0 else 1.0
    comp_vars = scale * rng.uniform(0.5, 2.0, size=K)
    weights = rng.dirichlet(np.ones(K))
    means, weights, comp_vars, _ = _order_means(means, weights, comp_vars, False)
    if cfg.pin_flat:
        means[_FLAT_INDEX] = 0.0
    comp_vars = np.maximum(comp_vars, cfg.var_floor)
    return MixtureParams(K, weights, means, comp_vars)


def _kmeans_init(d: np.ndarray, var_d: float, cfg: FitConfig,
                 rng: np.random.Generator) -> MixtureParams:
    K = cfg.K
    # Cluster the sorted copy: k-means++ seeds from data rows, so this makes
    # the start a function of the value multiset alone, independent of input
    # order.  Cluster statistics are order-free anyway.
    ds = np.sort(d)
    km = KMeans(n_clusters=K, n_init=10,
                random_state=int(rng.integers(2 ** 31 - 1)))
    labels = km.fit_predict(ds.reshape(-1, 1))
    if len(np.unique(labels)) < K:
        raise ValueError("k-means produced an empty cluster")
    means = np.empty(K)
    comp_vars = np.empty(K)
    weights = np.empty(K)
    floor = max(cfg.var_floor, 1e-6 * (var_d if var_d > 0 else 1.0))
    for k in range(K):
        mask = labels == k
        means[k] = ds[mask].mean()
        comp_vars[k] = max(float(ds[mask].var()), floor)
        weights[k] = mask.mean()
    means, weights, comp_vars, _ = _order_means(means, weights, comp_vars, False)
    if cfg.pin_flat:
        means[_FLAT_INDEX] = 0.0
    return MixtureParams(K, weights, means, comp_vars)


# ---------------------------------------------------------------------------
# fitting


@dataclass
class _RunResult:
    start: int
    init_kind: str
    params: Optional[MixtureParams] = None
    trace: Optional[np.ndarray] = None
    error: Optional[str] = None


def _run_em(d: np.ndarray, se2: np.ndarray, cfg: FitConfig, start: int) -> _RunResult:
    rng = np.random.default_rng((cfg.seed, start))
    init_kind = "random"
    try:
        if start == 0 and cfg.kmeans_start:
            try:
                params = _kmeans_init(d, float(np.var(d)), cfg, rng)
                init_kind = "kmeans"
            except ValueError:
                params = _random_init(d, float(np.var(d)), cfg, rng)
        else:
            params = _random_init(d, float(np.var(d)), cfg, rng)

        m = d.shape[0]
        trace = [penalized_loglik(d, se2, params, cfg.penalized)]
        converged = False
        iterations = 0
        for iterations in range(1, cfg.max_iterations + 1):
            resp = e_step(d, se2, params)
            params = m_step(d, se2, resp, params, cfg)
            pll = penalized_loglik(d, se2, params, cfg.penalized)
            trace.append(pll)
            if abs(trace[-1] - trace[-2]) / m < cfg.tolerance:
                converged = True
                break
        params.penalized_loglik = trace[-1]
        params.n_iterations = iterations
        params.converged = converged
        return _RunResult(start, init_kind, params, np.asarray(trace))
    except NumericalError as exc:
        return _RunResult(start, init_kind, error=str(exc))


def fit_mixture(d, se2=None, cfg: FitConfig = FitConfig(), n_jobs: int = 1,
                ) -> Tuple[MixtureParams, np.ndarray, FitDiagnostics]:
    """Multi-start penalized EM fit.

    Start 0 is k-means-seeded when ``cfg.kmeans_start``; the rest draw
    random parameters from a generator seeded by ``(cfg.seed, start)``, so
    every start is reproducible in isolation and the fit is independent of
    execution order.  The winner is the start with the highest penalized
    log-likelihood (ties broken toward the lowest start index), relabeled so
    means decrease — with the flat component pinned in place when active.

    Returns ``(params, responsibilities, diagnostics)``.
    """
    d = np.asarray(d, dtype=np.float64).ravel()
    if np.any(~np.isfinite(d)):
        raise DataError("observed effects must be finite")
    m = d.shape[0]
    if cfg.heteroscedastic:
        if se2 is None:
            raise DataError("heteroscedastic fit requires per-observation noise variances")
        se2 = np.asarray(se2, dtype=np.float64).ravel()
        if se2.shape[0] != m:
            raise DataError("se2 length %d does not match %d observations" % (se2.shape[0], m))
        if np.any(~np.isfinite(se2)) or np.any(se2 < 0):
            raise DataError("noise variances must be finite and non-negative")
    else:
        se2 = np.zeros(m)
    if m < 2 * cfg.K:
        raise DataError("need at least %d observations to fit K=%d, got %d"
                        % (2 * cfg.K, cfg.K, m))

    if n_jobs > 1 and cfg.n_starts > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            runs = list(pool.map(lambda s: _run_em(d, se2, cfg, s), range(cfg.n_starts)))
    else:
        runs = [_run_em(d, se2, cfg, s) for s in range(cfg.n_starts)]

    best: Optional[_RunResult] = None
    for run in runs:
        if run.params is None:
            continue
        if best is None or run.params.penalized_loglik > best.params.penalized_loglik:
            best = run
    if best is None:
        raise NumericalError("all %d starts failed; last error: %s"
                             % (cfg.n_starts, runs[-1].error))

    params = best.params.copy()
    means, weights, comp_vars, _ = _order_means(params.means, params.weights,
                                                params.comp_vars, cfg.pin_flat)
    params.means, params.weights, params.comp_vars = means, weights, comp_vars
    resp = e_step(d, se2, params)

    diagnostics = FitDiagnostics(
        best_start=best.start,
        start_loglik=[r.params.penalized_loglik if r.params is not None else float("nan")
                      for r in runs],
        start_converged=[bool(r.params.converged) if r.params is not None else False
                         for r in runs],
        start_n_iterations=[r.params.n_iterations if r.params is not None else 0
                            for r in runs],
        start_init=[r.init_kind if r.error is None else "failed: " + r.error
                    for r in runs],
        loglik_trace=best.trace,
    )
    return params, resp, diagnostics


def fit_pooled(d, se2, var_floor: float = 1e-10) -> PooledParams:
    """Single-population random-effects MLE by profile likelihood.

    The overall mean has a closed form at fixed between-experiment variance
    ``v`` (the precision-weighted mean), so only ``v`` is searched: a coarse
    geometric scan over ``[var_floor, 10 * Var(d)]`` (upper end expanded
    tenfold, up to three times, while the maximum sits at the edge)
    followed by bounded refinement around the best cell.
    """
    d = np.asarray(d, dtype=np.float64).ravel()
    se2 = np.asarray(se2, dtype=np.float64).ravel()
    if d.shape != se2.shape:
        raise DataError("d and se2 must have matching shapes")
    if np.any(~np.isfinite(d)) or np.any(~np.isfinite(se2)) or np.any(se2 < 0):
        raise DataError("effects must be finite and noise variances non-negative")
    m = d.shape[0]
    if m < 2:
        raise DataError("need at least 2 observations, got %d" % m)

    def profile_mu(v: float) -> float:
        prec = 1.0 / (se2 + v)
        return float(prec @ d) / float(prec.sum())

    def profile_ll(v: float) -> float:
        total = se2 + v
        mu = profile_mu(v)
        return -0.5 * float(np.sum(_LOG_2PI + np.log(total) + (d - mu) ** 2 / total))

    var_d = float(np.var(d))
    lo = var_floor
    hi = max(10.0 * var_d if var_d > 0 else 10.0, 10.0 * lo)
    for _ in range(_MAX_BRACKET_EXPANSIONS + 1):
        grid = np.geomspace(lo, hi, 256)
        total = se2[None, :] + grid[:, None]
        prec = 1.0 / total
        mu_v = (prec * d[None, :]).sum(axis=1) / prec.sum(axis=1)
        ll = -0.5 * (np.log(total).sum(axis=1) + m * _LOG_2PI
                     + ((d[None, :] - mu_v[:, None]) ** 2 * prec).sum(axis=1))
        i = int(np.argmax(ll))
        if i < len(grid) - 1:
            break
        hi *= 10.0
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda v: -profile_ll(v), bounds=(a, b),
                                   method="bounded",
                                   options={"xatol": 1e-13 * max(1.0, hi)})
    v_star = float(res.x)
    if profile_ll(lo) >= profile_ll(v_star):
        v_star = lo
    tau2 = max(v_star, var_floor)
    return PooledParams(mu0=profile_mu(tau2), tau2=tau2, loglik=profile_ll(tau2))


def extract_aes(params: MixtureParams) -> float:
    """Read the assumed effect size off a fitted mixture.

    With three or fewer components this is the top (largest-mean) component
    mean; with more, the weight-averaged mean over all positive-mean
    components.  Raises :class:`EstimationError` when no positive mean
    exists to read.
    """
    if params.K <= 3:
        top = float(params.means[0])
        if top <= 0:
            raise EstimationError(
                "largest component mean is %g; no positive effect to assume" % top)
        return top
    mask = params.means > 0
    if not np.any(mask):
        raise EstimationError("no component has a positive mean")
    w = params.weights[mask]
    return float(w @ params.means[mask]) / float(w.sum())


# ---------------------------------------------------------------------------
# estimator wrapper


class EffectSizeGMM(BaseEstimator):
    """Mixture model over observed effects with known per-observation noise.

    Parameters follow scikit-learn conventions (``n_components``, ``tol``,
    ``max_iter``, ``random_state``); see :class:`FitConfig` for semantics.
    ``X`` may be a 1-D effect array, an ``(m, 1)`` column, or an ``(m, 2)``
    matrix with columns ``[effect, noise_var]``; noise variances may also be
    passed separately as ``se2``.

    Attributes set by :meth:`fit`: ``weights_``, ``means_``, ``comp_vars_``,
    ``responsibilities_``, ``penalized_loglik_``, ``n_iter_``,
    ``converged_``, ``params_``, ``diagnostics_``.
    """

    def __init__(self, n_components: int = 3, fix_flat_mean: Optional[bool] = None,
                 heteroscedastic: bool = True, penalized: bool = True,
                 tol: float = 1e-3, max_iter: int = 500, n_starts: int = 10,
                 kmeans_start: bool = True, inner_tol: float = 1e-8,
                 var_floor: float = 1e-10, random_state: int = 0, n_jobs: int = 1):
        self.n_components = n_components
        self.fix_flat_mean = fix_flat_mean
        self.heteroscedastic = heteroscedastic
        self.penalized = penalized
        self.tol = tol
        self.max_iter = max_iter
        self.n_starts = n_starts
        self.kmeans_start = kmeans_start
        self.inner_tol = inner_tol
        self.var_floor = var_floor
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _config(self) -> FitConfig:
        return FitConfig(
            K=self.n_components, fix_flat_mean=self.fix_flat_mean,
            heteroscedastic=self.heteroscedastic, penalized=self.penalized,
            tolerance=self.tol, max_iterations=self.max_iter,
            n_starts=self.n_starts, kmeans_start=self.kmeans_start,
            inner_tolerance=self.inner_tol, var_floor=self.var_floor,
            seed=self.random_state)

    def fit(self, X, y=None, se2=None):
        d, noise = effect_noise_arrays(X, se2=se2, heteroscedastic=self.heteroscedastic)
        cfg = self._config()
        params, resp, diagnostics = fit_mixture(d, noise, cfg, n_jobs=self.n_jobs)
        self.params_ = params
        self.weights_ = params.weights
        self.means_ = params.means
        self.comp_vars_ = params.comp_vars
        self.responsibilities_ = resp
        self.penalized_loglik_ = params.penalized_loglik
        self.n_iter_ = params.n_iterations
        self.converged_ = params.converged
        self.diagnostics_ = diagnostics
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("this EffectSizeGMM instance is not fitted yet")

    def predict_proba(self, X, se2=None) -> np.ndarray:
        self._check_fitted()
        d, noise = effect_noise_arrays(X, se2=se2, heteroscedastic=self.heteroscedastic)
        return e_step(d, noise, self.params_)

    def predict(self, X, se2=None) -> np.ndarray:
        return np.argmax(self.predict_proba(X, se2=se2), axis=1)

    def score(self, X, y=None, se2=None) -> float:
        """Mean (unpenalized) marginal log-likelihood per observation."""
        self._check_fitted()
        d, noise = effect_noise_arrays(X, se2=se2, heteroscedastic=self.heteroscedastic)
        return penalized_loglik(d, noise, self.params_, penalized=False) / d.shape[0]

    def assumed_effect_size(self) -> float:
        self._check_fitted()
        return extract_aes(self.params_)
