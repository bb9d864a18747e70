"""Seeded generators for the exponential-interval / power-law-toll model.

Every stream owns a ``numpy.random.Generator`` on PCG64 seeded from the
spec, so output is a pure function of the spec (for a fixed numpy
version, recorded by :func:`rng_metadata`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.special import zeta

from eventpulse.ingest import City, CitySeries, EventRecord

RNG_ALGORITHM = "PCG64"
CDF_TABLE_MAX = 100_000


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def rng_metadata() -> dict:
    return {"algorithm": RNG_ALGORITHM, "numpy_version": np.__version__}


def rng_smoke_test(seed: int = 0, n: int = 100_000, bins: int = 100) -> float:
    """Chi-square p-value of binned uniform draws."""
    counts, _ = np.histogram(make_rng(seed).random(n), bins=bins, range=(0.0, 1.0))
    return float(stats.chisquare(counts).pvalue)


@dataclass(frozen=True)
class GeneratorSpec:
    seed: int
    mu: float  # mean inter-event interval at t = 0, days
    alpha: float = 2.5
    x_min: int = 1
    span_days: int = 4677
    rate_ramp: float = 0.0  # fractional rate increase across the span
    jitter_deg: float = 0.0  # uniform +/- offset of event coordinates

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.alpha > 1:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if self.x_min < 1:
            raise ValueError(f"x_min must be >= 1, got {self.x_min}")
        if self.span_days < 1:
            raise ValueError(f"span_days must be >= 1, got {self.span_days}")
        if self.rate_ramp < 0:
            raise ValueError(f"rate_ramp must be >= 0, got {self.rate_ramp}")


class DiscretePowerLaw:
    """p(x) = x^-alpha / zeta(alpha, x_min) for integer x >= x_min.

    Inverse-CDF sampling from an exact table up to ``CDF_TABLE_MAX``;
    draws beyond the table use the asymptotic tail
    zeta(alpha, x) ~ (x - 1/2)^(1 - alpha) / (alpha - 1).
    """

    def __init__(self, alpha: float, x_min: int = 1, table_max: int = CDF_TABLE_MAX):
        self.alpha = float(alpha)
        self.x_min = int(x_min)
        self.norm = float(zeta(self.alpha, self.x_min))
        xs = np.arange(self.x_min, max(table_max, self.x_min) + 1, dtype=float)
        self.cdf_table = 1.0 - zeta(self.alpha, xs + 1.0) / self.norm

    def pmf(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        return np.where(x >= self.x_min, x ** -self.alpha / self.norm, 0.0)

    def cdf(self, x) -> np.ndarray:
        x = np.floor(np.asarray(x, float))
        return np.where(x >= self.x_min, 1.0 - zeta(self.alpha, x + 1.0) / self.norm, 0.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        idx = np.searchsorted(self.cdf_table, u, side="left")
        out = (self.x_min + idx).astype(np.int64)
        beyond = idx >= len(self.cdf_table)
        if beyond.any():
            a1 = self.alpha - 1.0
            y = 0.5 + (a1 * (1.0 - u[beyond]) * self.norm) ** (-1.0 / a1)
            big = np.minimum(np.ceil(y) - 1.0, float(np.iinfo(np.int64).max // 2))
            out[beyond] = np.maximum(big, len(self.cdf_table) + self.x_min).astype(np.int64)
        return out


@lru_cache(maxsize=16)
def _power_law(alpha: float, x_min: int) -> DiscretePowerLaw:
    return DiscretePowerLaw(alpha, x_min)


def arrival_times(spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    """Continuous arrival times in [0, span_days).

    Rate (1/mu)(1 + rate_ramp t/span); ramped streams are produced by
    thinning a homogeneous stream at the peak rate.
    """
    peak_rate = (1.0 + spec.rate_ramp) / spec.mu
    span = float(spec.span_days)
    expected = span * peak_rate
    chunk = int(expected + 10.0 * math.sqrt(expected) + 16)
    times = []
    t = 0.0
    while t < span:
        steps = np.cumsum(rng.exponential(1.0 / peak_rate, size=chunk)) + t
        times.append(steps)
        t = float(steps[-1])
    times = np.concatenate(times)
    times = times[times < span]
    if spec.rate_ramp > 0:
        accept = rng.random(len(times)) < (1.0 + spec.rate_ramp * times / span) / (1.0 + spec.rate_ramp)
        times = times[accept]
    return times


def gen_city(spec: GeneratorSpec, city: City) -> CitySeries:
    """Draw one city's incident stream.

    Event days are the integer part of continuous arrival times, so
    day-level intervals keep the generator's mean (no per-interval
    rounding bias accumulates).
    """
    rng = make_rng(spec.seed)
    days = np.floor(arrival_times(spec, rng)).astype(np.int64)
    deaths = _power_law(spec.alpha, spec.x_min).sample(rng, len(days))
    if spec.jitter_deg > 0:
        dlat = rng.uniform(-spec.jitter_deg, spec.jitter_deg, len(days))
        dlon = rng.uniform(-spec.jitter_deg, spec.jitter_deg, len(days))
    else:
        dlat = dlon = np.zeros(len(days))
    lat = np.clip(city.lat + dlat, -90.0, 90.0)
    lon = (city.lon + dlon + 180.0) % 360.0 - 180.0
    events = tuple(
        EventRecord(int(d), round(float(la), 6), round(float(lo), 6), int(k))
        for d, la, lo, k in zip(days, lat, lon, deaths)
    )
    return CitySeries(city, events, spec.span_days)


def gen_fleet(specs: Sequence[GeneratorSpec], cities: Sequence[City]) -> list[CitySeries]:
    """Independent streams; city i uses seed ``specs[i].seed + i``."""
    if len(specs) != len(cities):
        raise ValueError(f"{len(specs)} specs for {len(cities)} cities")
    return [gen_city(replace(s, seed=s.seed + i), c) for i, (s, c) in enumerate(zip(specs, cities))]


def lattice_cities(n: int, seed: int, spacing_deg: float = 5.0) -> list[City]:
    """``n`` synthetic cities on a lattice, populations drawn independently."""
    rng = make_rng(seed ^ 0x5EED)
    per_row = max(1, int(360 // spacing_deg) - 1)
    pops = np.round(10 ** rng.uniform(4.5, 7.0, n)).astype(np.int64)
    cities = []
    for i in range(n):
        r, c = divmod(i, per_row)
        lat = -60.0 + spacing_deg * r
        if lat > 80.0:
            raise ValueError(f"too many cities for spacing {spacing_deg}")
        lon = -175.0 + spacing_deg * c
        cities.append(City(f"C{i:04d}", f"city{i}", "SYN", lat, lon, int(pops[i])))
    return cities


def fleet_specs(
    n: int,
    seed: int,
    min_attacks: int = 141,
    max_attacks: int = 3983,
    span_days: int = 4677,
    alpha: float = 2.5,
    x_min: int = 1,
    rate_ramp: float = 0.0,
    jitter_deg: float = 0.0,
) -> list[GeneratorSpec]:
    """Specs whose expected attack counts are log-spaced over
    [min_attacks, max_attacks] within ``span_days``."""
    targets = np.geomspace(max_attacks, min_attacks, n) if n > 1 else np.array([float(max_attacks)])
    # a ramped stream's mean rate over the span is (1 + ramp/2) / mu
    return [
        GeneratorSpec(
            seed=seed,
            mu=span_days * (1.0 + rate_ramp / 2.0) / a,
            alpha=alpha,
            x_min=x_min,
            span_days=span_days,
            rate_ramp=rate_ramp,
            jitter_deg=jitter_deg,
        )
        for a in targets
    ]
