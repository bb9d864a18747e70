"""Next-event predictive densities, entropy and information loss.

All information quantities are in nats; use :func:`nats_to_bits` at
report time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

Mode = Literal["ML", "CNML"]
DEFAULT_BINS = 32
MIN_KL_SAMPLES = 50


def _check_mu(mu: float, name: str = "mu") -> None:
    if not (mu > 0 and math.isfinite(mu)):
        raise ValueError(f"{name} must be positive and finite, got {mu}")


def _check_x(x: float) -> None:
    if not x >= 0:
        raise ValueError(f"x_next must be >= 0, got {x}")


def ml_predictive(x_next: float, mu: float) -> float:
    _check_mu(mu)
    _check_x(x_next)
    return math.exp(-x_next / mu) / mu


def cnml_predictive(x_next: float, mu: float, n: int) -> float:
    """CNML density n^(n+1) mu^n / (n mu + x)^(n+1).

    Evaluated as (1/mu) (1 + x/(n mu))^-(n+1) so large n stays finite.
    """
    _check_mu(mu)
    _check_x(x_next)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return math.exp(-(n + 1) * math.log1p(x_next / (n * mu))) / mu


@dataclass(frozen=True)
class PredictiveDensity:
    mode: Mode
    mu: float
    n: int = 1

    def __post_init__(self):
        if self.mode not in ("ML", "CNML"):
            raise ValueError(f"mode must be ML or CNML, got {self.mode!r}")
        _check_mu(self.mu)
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")

    def pdf(self, x: float) -> float:
        if self.mode == "ML":
            return ml_predictive(x, self.mu)
        return cnml_predictive(x, self.mu, self.n)

    def cdf(self, x: float) -> float:
        _check_x(x)
        if self.mode == "ML":
            return -math.expm1(-x / self.mu)
        # 1 - (n mu / (n mu + x))^n
        return -math.expm1(-self.n * math.log1p(x / (self.n * self.mu)))

    def quantile(self, q: float) -> float:
        return quantile_next(q, self)


def quantile_next(q: float, density: PredictiveDensity) -> float:
    """Waiting time not exceeded with probability ``q``."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    tail = -math.log1p(-q)  # -ln(1 - q)
    if density.mode == "ML":
        return density.mu * tail
    n = density.n
    return n * density.mu * math.expm1(tail / n)


def exponential_entropy(mu: float) -> float:
    """Differential entropy ln(e mu) of an exponential law, in nats."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return 1.0 + math.log(mu)


def kl_exponential(mu_true: float, mu_model: float) -> float:
    """D(Exp(mu_true) || Exp(mu_model)) in nats."""
    _check_mu(mu_true, "mu_true")
    _check_mu(mu_model, "mu_model")
    r = mu_true / mu_model
    # ln(1/r) + r - 1, with log1p for accuracy near r = 1
    return (r - 1.0) - math.log1p(r - 1.0)


def kl_empirical(samples: Sequence[float], mu_model: float, bins: int = DEFAULT_BINS) -> float:
    """Histogram estimate of D(data || Exp(mu_model)) in nats.

    Equal-width bins over [0, max sample]; each bin's data mass is
    compared with the model's mass on the same bin. Empty bins add
    nothing (0 log 0 = 0).
    """
    _check_mu(mu_model, "mu_model")
    x = np.asarray(samples, float)
    if len(x) < MIN_KL_SAMPLES:
        raise ValueError(f"need at least {MIN_KL_SAMPLES} samples, got {len(x)}")
    if bins < 5:
        raise ValueError(f"bins must be >= 5, got {bins}")
    if (x < 0).any():
        raise ValueError("samples must be non-negative")
    top = float(x.max())
    if top == 0.0:
        raise ValueError("degenerate sample: all values are zero")
    counts, edges = np.histogram(x, bins=bins, range=(0.0, top))
    p = counts / len(x)
    # log model mass of [a, b): -a/mu + log(1 - exp(-(b - a)/mu)); no cancellation in the tail
    log_q = -edges[:-1] / mu_model + np.log(-np.expm1(-np.diff(edges) / mu_model))
    nz = p > 0
    return float(np.sum(p[nz] * (np.log(p[nz]) - log_q[nz])))


def histogram_entropy(samples: Sequence[float], bins: int = DEFAULT_BINS) -> float:
    """Plug-in differential entropy estimate from an equal-width histogram."""
    x = np.asarray(samples, float)
    counts, edges = np.histogram(x, bins=bins)
    p = counts / len(x)
    width = edges[1] - edges[0]
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz] / width)))


def nats_to_bits(nats: float) -> float:
    return nats / math.log(2.0)
