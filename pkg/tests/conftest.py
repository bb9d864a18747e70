import sys

import numpy as np
import pytest

from eventpulse.ingest import City, CitySeries, EventRecord


def make_series(days, deaths=None, span=None, city_id="X", population=0):
    deaths = deaths if deaths is not None else [1] * len(days)
    city = City(city_id, city_id, "T", 0.0, 0.0, population)
    events = tuple(EventRecord(int(d), 0.0, 0.0, int(k)) for d, k in zip(days, deaths))
    return CitySeries(city, events, span if span is not None else max(days))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def three_cities():
    return [
        City("a", "Alpha", "AA", 10.0, 10.0, 100),
        City("b", "Beta", "BB", 10.0, 20.0, 200),
        City("c", "Gamma", "CC", -5.0, 15.0, 0),
    ]


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, (ok, detail) in sorted(mod.RESULTS.items(), key=lambda kv: int(kv[0].split()[0][2:])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
