"""Per-city distribution fits and cross-city regressions."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import zeta

from eventpulse.ingest import CitySeries

Z_95 = 1.96
ALPHA_MAX = 6.0
MIN_POWER_LAW_SAMPLES = 10


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class ExponentialFit:
    """Exponential mean with its normal-approximation 95% bounds.

    When 1 - 1.96/sqrt(n) <= 0 (n <= 3) the upper bound is ``math.inf``.
    """

    mu_hat: float
    n: int
    ci_lower: float
    ci_upper: float

    @property
    def rel_error(self) -> float:
        return Z_95 / math.sqrt(self.n)

    def to_json(self) -> dict:
        d = asdict(self)
        return {k: _json_float(v) for k, v in d.items()}


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    x_min: int
    n_tail: int
    ks_distance: float

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RegressionSummary:
    slope: float
    intercept: float
    adj_r2: float
    k: int
    v: int = 1

    def to_json(self) -> dict:
        return asdict(self)


def _json_float(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


# -- exponential --------------------------------------------------------------

def exponential_ci(mu_hat: float, n: int, z: float = Z_95) -> tuple[float, float]:
    half = z / math.sqrt(n)
    lower = mu_hat / (1.0 + half)
    upper = mu_hat / (1.0 - half) if half < 1.0 else math.inf
    return lower, upper


def fit_exponential(samples: Sequence[float]) -> ExponentialFit:
    """ML fit of an exponential law: the sample mean, with bounds
    mu_hat / (1 -/+ 1.96/sqrt(n))."""
    x = np.asarray(samples, dtype=float)
    n = len(x)
    if n < 2:
        raise FitError(f"need at least 2 samples, got {n}")
    if (x < 0).any() or not np.isfinite(x).all():
        raise FitError("samples must be finite and non-negative")
    if not (x > 0).any():
        raise FitError("degenerate sample: all values are zero")
    mu_hat = float(x.mean())
    lower, upper = exponential_ci(mu_hat, n)
    return ExponentialFit(mu_hat, n, lower, upper)


def exponential_pdf(t: float, mu: float) -> float:
    if mu <= 0 or not math.isfinite(mu):
        raise ValueError(f"mu must be positive, got {mu}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    return math.exp(-t / mu) / mu


# -- discrete power law -------------------------------------------------------

def golden_section_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-6) -> float:
    """Maximiser of a unimodal ``f`` on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2.0


def power_law_loglik(alpha: float, n: int, sum_log: float, x_min: int) -> float:
    """Discrete power-law log-likelihood from sufficient statistics."""
    return -n * math.log(zeta(alpha, x_min)) - alpha * sum_log


def _alpha_mle(n: int, sum_log: float, x_min: int, tol: float) -> float:
    # alpha -> 1 makes zeta diverge; start just inside the open interval
    return golden_section_max(
        lambda a: power_law_loglik(a, n, sum_log, x_min), 1.0 + 1e-9, ALPHA_MAX, tol
    )


def power_law_ks(tail: np.ndarray, alpha: float, x_min: int) -> float:
    """KS distance between a sorted integer tail and the fitted discrete law."""
    values, counts = np.unique(tail, return_counts=True)
    emp = np.cumsum(counts) / len(tail)
    # model CDF just at each value and just below it
    norm = zeta(alpha, x_min)
    model = 1.0 - zeta(alpha, values + 1) / norm
    model_below = 1.0 - zeta(alpha, values) / norm
    emp_below = np.concatenate([[0.0], emp[:-1]])
    return float(max(np.abs(emp - model).max(), np.abs(emp_below - model_below).max()))


def fit_power_law(
    samples: Sequence[int],
    min_tail: int = MIN_POWER_LAW_SAMPLES,
    tol: float = 1e-6,
) -> PowerLawFit:
    """Discrete power-law fit: alpha by maximum likelihood at every
    candidate x_min, keeping the x_min with the smallest KS distance.

    Values below 1 (zero-death events) are dropped first. Candidate
    x_min values are the distinct sample values whose tail holds at
    least ``min_tail`` observations and two distinct values.
    """
    x = np.asarray(samples)
    if x.size and not np.all(np.equal(np.mod(x, 1), 0)):
        raise FitError("power-law samples must be integers")
    x = np.sort(x[x >= 1].astype(np.int64))
    if len(x) < MIN_POWER_LAW_SAMPLES:
        raise FitError(f"need at least {MIN_POWER_LAW_SAMPLES} samples >= 1, got {len(x)}")
    if x[0] == x[-1]:
        raise FitError("no tail variation: all samples identical")

    logs = np.log(x)
    # suffix sums give the tail statistics at each candidate in O(1)
    suffix_log = np.concatenate([np.cumsum(logs[::-1])[::-1], [0.0]])
    candidates, first = np.unique(x, return_index=True)

    best = None
    for x_min, start in zip(candidates, first):
        n_tail = len(x) - start
        if n_tail < max(2, min_tail) or x[start] == x[-1]:
            break
        alpha = _alpha_mle(n_tail, suffix_log[start], int(x_min), tol)
        ks = power_law_ks(x[start:], alpha, int(x_min))
        if best is None or ks < best.ks_distance:
            best = PowerLawFit(alpha, int(x_min), int(n_tail), ks)
    if best is None:
        raise FitError("no candidate tail large enough")
    return best


# -- regression metrics -------------------------------------------------------

def r_squared(y: Sequence[float], y_hat: Sequence[float]) -> float:
    y = np.asarray(y, float)
    y_hat = np.asarray(y_hat, float)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise FitError("y has zero variance")
    return 1.0 - float(((y - y_hat) ** 2).sum()) / ss_tot


def adjusted_r_squared(y: Sequence[float], y_hat: Sequence[float], v: int) -> float:
    """1 - (1 - R^2)(K - 1)/(K - V - 1) for K observations, V regressors."""
    if len(y) != len(y_hat):
        raise FitError(f"length mismatch: {len(y)} vs {len(y_hat)}")
    k = len(y)
    if k <= v + 1:
        raise FitError(f"need K > V + 1, got K={k}, V={v}")
    r2 = r_squared(y, y_hat)
    return 1.0 - (1.0 - r2) * (k - 1) / (k - v - 1)


def linear_regression(x: Sequence[float], y: Sequence[float]) -> RegressionSummary:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if len(x) < 3:
        raise FitError(f"need at least 3 points, got {len(x)}")
    xc = x - x.mean()
    sxx = float((xc**2).sum())
    if sxx == 0.0:
        raise FitError("regressor has zero variance")
    slope = float((xc * (y - y.mean())).sum()) / sxx
    intercept = float(y.mean() - slope * x.mean())
    adj = adjusted_r_squared(y, intercept + slope * x, v=1)
    return RegressionSummary(slope, intercept, adj, len(x), 1)


def interval_attack_regression(series: Sequence[CitySeries]) -> RegressionSummary:
    """Regress each city's fitted mean interval on span/attack-count."""
    if len(series) < 3:
        raise FitError(f"need at least 3 cities, got {len(series)}")
    x = [s.span_days / s.attack_count for s in series]
    y = [fit_exponential(s.intervals).mu_hat for s in series]
    return linear_regression(x, y)


def population_correlation(series: Sequence[CitySeries]) -> RegressionSummary:
    """Regress attack count on population over cities with known population."""
    known = [s for s in series if s.city.population > 0]
    if len(known) < 3:
        raise FitError(f"need at least 3 cities with population > 0, got {len(known)}")
    return linear_regression(
        [s.city.population for s in known], [s.attack_count for s in known]
    )
