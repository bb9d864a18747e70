import numpy as np
import pytest
from scipy.special import zeta

from eventpulse.distfit import fit_exponential, fit_power_law, interval_attack_regression
from eventpulse.ingest import City, events_to_csv, parse_events
from eventpulse.synth import (
    DiscretePowerLaw,
    GeneratorSpec,
    arrival_times,
    fleet_specs,
    gen_city,
    gen_fleet,
    lattice_cities,
    make_rng,
    rng_metadata,
    rng_smoke_test,
)

CITY = City("x", "X", "XX", 33.3, 44.4, 1000)


def test_determinism():
    spec = GeneratorSpec(seed=42, mu=2.0, span_days=2000, rate_ramp=0.5, jitter_deg=0.1)
    a, b = gen_city(spec, CITY), gen_city(spec, CITY)
    assert a == b
    assert events_to_csv(a.events).encode() == events_to_csv(b.events).encode()


def test_exponential_recovery_within_own_ci():
    s = gen_city(GeneratorSpec(seed=3, mu=3.0, span_days=6000), CITY)
    fit = fit_exponential(s.intervals)
    assert fit.ci_lower <= 3.0 <= fit.ci_upper


def test_power_law_recovery():
    s = gen_city(GeneratorSpec(seed=9, mu=0.5, span_days=5200, alpha=2.5), CITY)
    assert s.attack_count >= 10_000
    assert 2.4 <= fit_power_law(s.deaths_per_attack).alpha <= 2.6


def test_day_rounding_bias():
    eps = 0.05
    for mu in (0.7, 3.0, 20.0):
        s = gen_city(GeneratorSpec(seed=1, mu=mu, span_days=200_000), CITY)
        m = np.mean(s.intervals)
        assert mu - 0.5 - eps <= m <= mu + eps


def test_ramp_thinning_increases_rate():
    t = arrival_times(GeneratorSpec(seed=4, mu=1.0, span_days=10_000, rate_ramp=1.0), make_rng(4))
    first, second = (t < 5000).sum(), (t >= 5000).sum()
    # rate integrates to 5000*1.25 and 5000*1.75
    assert first == pytest.approx(6250, rel=0.05)
    assert second == pytest.approx(8750, rel=0.05)


def test_events_within_span_and_near_city():
    spec = GeneratorSpec(seed=8, mu=1.0, span_days=365, jitter_deg=0.05)
    s = gen_city(spec, CITY)
    assert all(0 <= e.day < 365 for e in s.events)
    assert all(abs(e.lat - CITY.lat) <= 0.05 and abs(e.lon - CITY.lon) <= 0.05 for e in s.events)


def test_power_law_pmf_normalizes():
    for alpha, x_min in [(1.5, 1), (2.5, 1), (3.0, 4)]:
        pl = DiscretePowerLaw(alpha, x_min)
        x = np.arange(x_min, 10**6 + 1)
        head = pl.pmf(x).sum()
        # remainder beyond 1e6 is known in closed form
        tail = zeta(alpha, 10**6 + 1) / pl.norm
        assert head + tail == pytest.approx(1.0, abs=1e-6)
        if alpha > 2:
            assert head == pytest.approx(1.0, abs=1e-6)


def test_power_law_sampler_matches_pmf():
    pl = DiscretePowerLaw(2.5, 1)
    x = pl.sample(make_rng(0), 200_000)
    for k in range(1, 6):
        assert np.mean(x == k) == pytest.approx(pl.pmf(k), abs=4e-3)
    assert np.mean(x > 100) == pytest.approx(1 - pl.cdf(100), rel=0.1)


def test_power_law_sampler_tail_fallback():
    pl = DiscretePowerLaw(1.5, 1, table_max=1000)
    x = pl.sample(make_rng(2), 100_000)
    exact = 1 - float(pl.cdf(5000))
    assert np.mean(x > 5000) == pytest.approx(exact, rel=0.1)
    assert (x >= 1).all()


def test_rng_uniformity_smoke():
    assert rng_smoke_test(seed=0) > 0.001
    assert rng_metadata()["algorithm"] == "PCG64"


def test_fleet_regression():
    cities = lattice_cities(40, seed=1)
    fleet = gen_fleet(fleet_specs(40, seed=1), cities)
    counts = [s.attack_count for s in fleet]
    assert min(counts) < 200 and max(counts) > 3500
    assert interval_attack_regression(fleet).adj_r2 > 0.9


def test_fleet_seed_derivation_and_errors():
    spec = GeneratorSpec(seed=10, mu=2.0, span_days=500)
    a, b = gen_fleet([spec, spec], [CITY, CITY])
    assert a.events != b.events
    assert a == gen_city(spec, CITY)
    assert b == gen_city(GeneratorSpec(seed=11, mu=2.0, span_days=500), CITY)
    assert gen_fleet([], []) == []
    with pytest.raises(ValueError):
        gen_fleet([spec], [])


def test_spec_validation():
    with pytest.raises(ValueError):
        GeneratorSpec(seed=0, mu=0)
    with pytest.raises(ValueError):
        GeneratorSpec(seed=0, mu=1, alpha=1.0)
    with pytest.raises(ValueError):
        GeneratorSpec(seed=0, mu=1, span_days=0)


def test_events_csv_round_trip():
    s = gen_city(GeneratorSpec(seed=2, mu=5.0, span_days=300, jitter_deg=0.2), CITY)
    assert tuple(parse_events(events_to_csv(s.events))) == s.events
