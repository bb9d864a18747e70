import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eventpulse.distfit import (
    ExponentialFit,
    FitError,
    adjusted_r_squared,
    exponential_pdf,
    fit_exponential,
    fit_power_law,
    golden_section_max,
    interval_attack_regression,
    population_correlation,
    r_squared,
)
from eventpulse.ingest import City, CitySeries, EventRecord
from eventpulse.synth import DiscretePowerLaw, make_rng

import oracles
from conftest import make_series

samples_st = st.lists(st.floats(0, 1e4, allow_nan=False), min_size=2, max_size=200).filter(
    lambda xs: any(x > 0 for x in xs)
)


def test_fit_exponential_mean():
    fit = fit_exponential([1, 2, 3])
    assert fit.mu_hat == 2.0 and fit.n == 3


@pytest.mark.parametrize(
    "n, upper, lower",
    [(3983, 1.0320518, 0.9698791), (141, 1.1976934, 0.8583236)],
)
def test_ci_bounds_at_reference_sample_sizes(n, upper, lower):
    fit = fit_exponential(np.full(n, 1.0) + np.r_[0.5, -0.5, np.zeros(n - 2)])
    assert fit.mu_hat == pytest.approx(1.0)
    assert fit.ci_upper == pytest.approx(upper, abs=1e-6)
    assert fit.ci_lower == pytest.approx(lower, abs=1e-6)


@pytest.mark.parametrize("n", [2, 3])
def test_ci_upper_infinite_when_denominator_not_positive(n):
    assert 1 - 1.96 / math.sqrt(n) <= 0
    fit = fit_exponential(np.arange(1, n + 1))
    assert fit.ci_upper == math.inf
    assert fit.to_json()["ci_upper"] == "inf"


def test_ci_upper_finite_from_four():
    # 1 - 1.96/2 = 0.02 > 0, so the bound is mu_hat / 0.02
    fit = fit_exponential([1, 2, 3, 4])
    assert fit.ci_upper == pytest.approx(2.5 / 0.02)


def test_fit_exponential_errors():
    with pytest.raises(FitError, match="degenerate"):
        fit_exponential([0, 0, 0])
    with pytest.raises(FitError, match="at least 2"):
        fit_exponential([3.0])
    with pytest.raises(FitError):
        fit_exponential([1, -1])


@given(samples_st, st.floats(1e-3, 1e3))
def test_scale_equivariance(xs, c):
    a = fit_exponential(xs).mu_hat
    b = fit_exponential([c * x for x in xs]).mu_hat
    assert b == pytest.approx(c * a, rel=1e-9)


@given(samples_st)
def test_ci_contains_estimate(xs):
    fit = fit_exponential(xs)
    assert fit.ci_lower <= fit.mu_hat <= fit.ci_upper


@given(st.floats(0.01, 100), st.integers(5, 10_000))
def test_ci_width_shrinks_with_n(mu, n):
    def width(m):
        lo = mu / (1 + 1.96 / math.sqrt(m))
        up = mu / (1 - 1.96 / math.sqrt(m))
        return up - lo

    a = ExponentialFit(mu, n, *_bounds(mu, n))
    b = ExponentialFit(mu, n + 1, *_bounds(mu, n + 1))
    assert b.ci_upper - b.ci_lower < a.ci_upper - a.ci_lower
    assert a.ci_upper - a.ci_lower == pytest.approx(width(n))


def _bounds(mu, n):
    from eventpulse.distfit import exponential_ci

    return exponential_ci(mu, n)


def test_exponential_pdf_values():
    assert exponential_pdf(0, 2) == 0.5
    assert exponential_pdf(3.0, 3.0) == pytest.approx(math.exp(-1) / 3.0, rel=1e-15)
    with pytest.raises(ValueError):
        exponential_pdf(-1, 1)
    with pytest.raises(ValueError):
        exponential_pdf(1, 0)


@pytest.mark.parametrize("mu", [0.1, 1.0, 37.0])
def test_exponential_pdf_normalizes(mu):
    assert oracles.quad_0_inf(lambda t: exponential_pdf(t, mu)) == pytest.approx(1.0, abs=1e-9)


def test_golden_section_on_parabola():
    assert golden_section_max(lambda a: -(a - 2.345) ** 2, 1, 6, 1e-8) == pytest.approx(2.345, abs=1e-7)


def test_power_law_recovery_matches_grid_oracle():
    x = DiscretePowerLaw(2.5, 1).sample(make_rng(7), 5000)
    fit = fit_power_law(x)
    assert 2.4 <= fit.alpha <= 2.6
    tail = x[x >= fit.x_min]
    assert fit.n_tail == len(tail)
    assert fit.alpha == pytest.approx(oracles.grid_alpha(tail, fit.x_min), abs=1.5e-3)


def test_power_law_mixed_sample_recovers_cutoff():
    rng = make_rng(11)
    body = rng.integers(1, 5, size=3000)  # flat over 1..4
    tail = DiscretePowerLaw(2.2, 5).sample(rng, 3000)
    x = np.concatenate([body, tail])
    fit = fit_power_law(x)
    assert fit.x_min <= 6
    scan = oracles.ks_scan(x, range(1, 12))
    best = min(scan, key=lambda k: scan[k][0])
    assert fit.x_min == best
    assert fit.ks_distance == pytest.approx(scan[best][0], abs=2e-3)
    assert fit.alpha == pytest.approx(2.2, abs=0.1)


def test_power_law_drops_zeros_and_rejects_degenerate():
    x = DiscretePowerLaw(2.0, 1).sample(make_rng(3), 200)
    with_zeros = np.concatenate([x, np.zeros(50, dtype=int)])
    assert fit_power_law(with_zeros) == fit_power_law(x)
    with pytest.raises(FitError, match="no tail variation"):
        fit_power_law([3] * 50)
    with pytest.raises(FitError, match="at least 10"):
        fit_power_law([0] * 20 + [1, 2, 3])


def test_power_law_invariants():
    fit = fit_power_law(DiscretePowerLaw(3.0, 2).sample(make_rng(5), 2000))
    assert fit.alpha > 1 and fit.x_min >= 1 and fit.n_tail >= 2


@pytest.mark.slow
def test_power_law_error_shrinks_with_n():
    pl = DiscretePowerLaw(2.5, 1)
    med = []
    for n in (1_000, 10_000, 100_000):
        errs = [abs(fit_power_law(pl.sample(make_rng(100 + r), n)).alpha - 2.5) for r in range(15)]
        med.append(np.median(errs))
    assert med[0] > med[1] > med[2]


def test_adjusted_r2_examples():
    y = np.arange(10.0)
    assert adjusted_r_squared(y, y, 3) == 1.0
    assert adjusted_r_squared(y, np.full(10, y.mean()), 1) == pytest.approx(-1 / 8)
    assert adjusted_r_squared([1, 2, 3], [1, 2, 4], 1) == pytest.approx(0.0, abs=1e-15)


def test_adjusted_r2_errors():
    with pytest.raises(FitError, match="zero variance"):
        adjusted_r_squared([1, 1, 1], [1, 2, 3], 1)
    with pytest.raises(FitError, match="K > V"):
        adjusted_r_squared([1, 2], [1, 2], 1)


@given(
    st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=4, max_size=30),
    st.integers(0, 2),
)
def test_adjusted_r2_not_above_r2(pairs, v):
    y = np.array([p[0] for p in pairs])
    y_hat = np.array([p[1] for p in pairs])
    if len(y) <= v + 1 or np.ptp(y) < 1e-6:
        return
    r2 = r_squared(y, y_hat)
    adj = adjusted_r_squared(y, y_hat, v)
    if v == 0:
        assert adj == pytest.approx(r2)
    else:
        assert adj <= r2 + 1e-12


def _tiling_city(i, spacing, count):
    days = [spacing * k for k in range(count)]
    return make_series(days, span=spacing * count, city_id=f"t{i}", population=1000 * (i + 1))


def test_interval_regression_exact_tiling():
    series = [_tiling_city(i, sp, 50 + 10 * i) for i, sp in enumerate([2, 3, 5, 7, 11])]
    reg = interval_attack_regression(series)
    assert reg.adj_r2 == pytest.approx(1.0)
    assert reg.slope == pytest.approx(1.0)
    assert reg.intercept == pytest.approx(0.0, abs=1e-9)
    assert reg.k == 5 and reg.v == 1


def test_interval_regression_needs_three_cities():
    with pytest.raises(FitError, match="at least 3"):
        interval_attack_regression([_tiling_city(0, 2, 10)])


def test_population_correlation_perfect_and_errors():
    series = [
        make_series(list(range(3 * k)), city_id=f"p{k}", population=100 * k) for k in (1, 2, 5, 9)
    ]
    assert population_correlation(series).adj_r2 == pytest.approx(1.0)
    zero = [make_series([0, 1, 2], city_id=f"z{k}") for k in range(5)]
    with pytest.raises(FitError, match="population > 0"):
        population_correlation(zero)


def test_population_independence_seeded(rng):
    series = []
    for k in range(40):
        n = int(rng.integers(141, 3984))
        series.append(make_series(list(range(n)), city_id=f"q{k}",
                                  population=int(rng.integers(10_000, 10_000_000))))
    assert abs(population_correlation(series).adj_r2) < 0.1
