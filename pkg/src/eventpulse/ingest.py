"""Event and gazetteer parsing, nearest-city clustering, per-city series."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence, Union

import numpy as np

EARTH_RADIUS_KM = 6371.0

#: smallest n with 1.96/sqrt(n) <= 0.2, i.e. ML relative error under 20%
DEFAULT_MIN_EVENTS = 97

Source = Union[bytes, str, Path, IO[bytes], IO[str]]


class IngestError(ValueError):
    """Raised for malformed input files. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, order=True)
class EventRecord:
    day: int
    lat: float
    lon: float
    deaths: int

    def __post_init__(self):
        _check_coords(self.lat, self.lon)
        if self.day < 0:
            raise IngestError(f"day must be >= 0, got {self.day}")
        if self.deaths < 0:
            raise IngestError(f"deaths must be >= 0, got {self.deaths}")


@dataclass(frozen=True)
class City:
    id: str
    name: str
    country: str
    lat: float
    lon: float
    population: int = 0

    def __post_init__(self):
        _check_coords(self.lat, self.lon)
        if self.population < 0:
            raise IngestError(f"population must be >= 0, got {self.population}")


@dataclass(frozen=True)
class CitySeries:
    """Ordered incidents of one city.

    ``span_days`` is the observation window T shared by all cities of a
    dataset: events lie on days ``0..span_days``.
    """

    city: City
    events: tuple[EventRecord, ...]
    span_days: int

    def __post_init__(self):
        events = tuple(sorted(self.events))
        object.__setattr__(self, "events", events)
        if events and events[-1].day > self.span_days:
            raise IngestError(
                f"event on day {events[-1].day} lies beyond span {self.span_days}"
            )

    @property
    def attack_count(self) -> int:
        return len(self.events)

    @property
    def days(self) -> list[int]:
        return [e.day for e in self.events]

    @property
    def intervals(self) -> list[int]:
        d = self.days
        return [b - a for a, b in zip(d, d[1:])]

    @property
    def deaths_per_attack(self) -> list[int]:
        return [e.deaths for e in self.events]


@dataclass(frozen=True)
class ClusterReport:
    assignments: dict[int, str]
    distances_km: tuple[float, ...] = field(repr=False)
    mean_distance_km: float
    max_distance_km: float

    def to_json(self) -> dict:
        return {
            "mean_distance_km": self.mean_distance_km,
            "max_distance_km": self.max_distance_km,
            "assignments": {str(k): v for k, v in sorted(self.assignments.items())},
        }


def _check_coords(lat: float, lon: float) -> None:
    if not (math.isfinite(lat) and -90.0 <= lat <= 90.0):
        raise IngestError(f"latitude out of range: {lat}")
    if not (math.isfinite(lon) and -180.0 <= lon <= 180.0):
        raise IngestError(f"longitude out of range: {lon}")


def _read_text(source: Source) -> str:
    if isinstance(source, Path):
        source = source.read_bytes()
    elif hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        try:
            return source.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise IngestError(f"input is not valid UTF-8: {exc}") from None
    return source


def _rows(text: str) -> Iterator[tuple[int, list[str]]]:
    """Yield (line number, cells), skipping blank and ``#`` lines."""
    for lineno, line in enumerate(io.StringIO(text), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, next(csv.reader([stripped]))


def parse_events(source: Source) -> list[EventRecord]:
    """Parse an events CSV with header ``day,lat,lon,deaths``.

    A ``date`` column (ISO-8601) may replace ``day``; dates become day
    indices relative to the earliest date in the file. Rows keep their
    input order.
    """
    rows = _rows(_read_text(source))
    try:
        _, header = next(rows)
    except StopIteration:
        return []
    header = [h.strip().lower() for h in header]
    if header == ["day", "lat", "lon", "deaths"]:
        dated = False
    elif header == ["date", "lat", "lon", "deaths"]:
        dated = True
    else:
        raise IngestError(
            f"unexpected header {','.join(header)!r}; "
            "expected day,lat,lon,deaths or date,lat,lon,deaths",
            line=1,
        )

    raw = []
    for lineno, cells in rows:
        if len(cells) != 4:
            raise IngestError(f"expected 4 fields, got {len(cells)}", line=lineno)
        t, lat, lon, deaths = (c.strip() for c in cells)
        try:
            t = dt.date.fromisoformat(t) if dated else int(t)
            lat, lon = float(lat), float(lon)
            deaths = int(deaths)
        except ValueError as exc:
            raise IngestError(f"malformed row: {exc}", line=lineno) from None
        try:
            _check_coords(lat, lon)
            if deaths < 0:
                raise IngestError(f"negative deaths: {deaths}")
            if not dated and t < 0:
                raise IngestError(f"negative day: {t}")
        except IngestError as exc:
            raise IngestError(str(exc), line=lineno) from None
        raw.append((lineno, t, lat, lon, deaths))

    if dated and raw:
        origin = min(r[1] for r in raw)
        raw = [(ln, (t - origin).days, la, lo, d) for ln, t, la, lo, d in raw]
    return [EventRecord(t, la, lo, d) for _, t, la, lo, d in raw]


def parse_gazetteer(source: Source) -> list[City]:
    """Parse a gazetteer CSV ``id,name,country,lat,lon,population``.

    A blank population means unknown and is stored as 0.
    """
    rows = _rows(_read_text(source))
    try:
        _, header = next(rows)
    except StopIteration:
        raise IngestError("empty gazetteer") from None
    header = [h.strip().lower() for h in header]
    expected = ["id", "name", "country", "lat", "lon", "population"]
    if header != expected:
        raise IngestError(f"unexpected header {','.join(header)!r}", line=1)

    cities: list[City] = []
    seen: dict[str, int] = {}
    for lineno, cells in rows:
        if len(cells) != 6:
            raise IngestError(f"expected 6 fields, got {len(cells)}", line=lineno)
        cid, name, country, lat, lon, pop = (c.strip() for c in cells)
        if not cid:
            raise IngestError("empty city id", line=lineno)
        if cid in seen:
            raise IngestError(
                f"duplicate city id {cid!r} (first seen on line {seen[cid]})",
                line=lineno,
            )
        seen[cid] = lineno
        try:
            city = City(cid, name, country, float(lat), float(lon), int(pop) if pop else 0)
        except (ValueError, IngestError) as exc:
            raise IngestError(str(exc), line=lineno) from None
        cities.append(city)
    if not cities:
        raise IngestError("empty gazetteer")
    return cities


def great_circle_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Haversine distance between two (lat, lon) points in km."""
    lat1, lon1 = map(math.radians, a)
    lat2, lon2 = map(math.radians, b)
    h = (
        math.sin((lat2 - lat1) / 2) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    )
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def haversine_matrix(lat1, lon1, lat2, lon2) -> np.ndarray:
    """Pairwise haversine distances (km) between two point sets, in degrees."""
    lat1 = np.radians(np.asarray(lat1, float))[:, None]
    lon1 = np.radians(np.asarray(lon1, float))[:, None]
    lat2 = np.radians(np.asarray(lat2, float))[None, :]
    lon2 = np.radians(np.asarray(lon2, float))[None, :]
    h = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


class CityGrid:
    """Uniform lat/lon bucketing of cities for nearest-city queries.

    Queries are answered per occupied cell: candidates are gathered from
    the cells covering a spherical cap around the query cell, doubling
    the cap radius until every nearest distance lies strictly inside it.
    Cities are held in ascending id order so that ``argmin`` over any
    candidate subset breaks distance ties toward the smallest id.
    """

    def __init__(self, cities: Sequence[City], cell_deg: float = 2.0):
        if not cities:
            raise IngestError("empty gazetteer")
        self.cities = sorted(cities, key=lambda c: c.id)
        self.lat = np.array([c.lat for c in self.cities])
        self.lon = np.array([c.lon for c in self.cities])
        self.cell_deg = cell_deg
        self.nrows = int(math.ceil(180.0 / cell_deg))
        self.ncols = int(math.ceil(360.0 / cell_deg))
        self.buckets: dict[tuple[int, int], list[int]] = {}
        for i, (la, lo) in enumerate(zip(self.lat, self.lon)):
            self.buckets.setdefault(self._cell(la, lo), []).append(i)

    def _cell(self, lat: float, lon: float) -> tuple[int, int]:
        r = min(int((lat + 90.0) // self.cell_deg), self.nrows - 1)
        c = int((lon + 180.0) // self.cell_deg) % self.ncols
        return r, c

    def _cap_candidates(self, r0: int, c0: int, radius_km: float) -> np.ndarray:
        """Indices of cities in cells that may lie within ``radius_km`` of
        any point of cell (r0, c0)."""
        delta = math.degrees(radius_km / EARTH_RADIUS_KM) + 1e-9
        lat_lo = -90.0 + r0 * self.cell_deg - delta
        lat_hi = -90.0 + (r0 + 1) * self.cell_deg + delta
        rows = range(max(0, int((lat_lo + 90.0) // self.cell_deg)),
                     min(self.nrows, int((lat_hi + 90.0) // self.cell_deg) + 1))
        if lat_lo <= -90.0 or lat_hi >= 90.0 or delta >= 90.0:
            cols = range(self.ncols)  # the cap reaches a pole
        else:
            # widest longitude reach of the cap, attained at the highest |lat|
            phi = math.radians(max(abs(lat_lo + delta), abs(lat_hi - delta)))
            s = math.sin(math.radians(delta)) / math.cos(phi)
            half = 180.0 if s >= 1.0 else math.degrees(math.asin(s)) + 1e-9
            lon_lo = -180.0 + c0 * self.cell_deg - half
            lon_hi = -180.0 + (c0 + 1) * self.cell_deg + half
            first = int(math.floor((lon_lo + 180.0) / self.cell_deg))
            last = int(math.floor((lon_hi + 180.0) / self.cell_deg))
            cols = range(self.ncols) if last - first + 1 >= self.ncols else range(first, last + 1)
        out: list[int] = []
        for r in rows:
            for c in cols:
                out.extend(self.buckets.get((r, c % self.ncols), ()))
        return np.array(sorted(out), dtype=np.int64)

    def nearest(self, lat, lon) -> tuple[np.ndarray, np.ndarray]:
        """Index into ``self.cities`` and distance of the nearest city per point."""
        lat = np.asarray(lat, float)
        lon = np.asarray(lon, float)
        idx = np.empty(len(lat), dtype=np.int64)
        dist = np.empty(len(lat))
        groups: dict[tuple[int, int], list[int]] = {}
        for i, (la, lo) in enumerate(zip(lat, lon)):
            groups.setdefault(self._cell(la, lo), []).append(i)

        half_circumference = math.pi * EARTH_RADIUS_KM
        for (r0, c0), members in groups.items():
            members = np.array(members)
            radius = EARTH_RADIUS_KM * math.radians(self.cell_deg)
            while True:
                exhaustive = radius >= half_circumference
                cand = (np.arange(len(self.cities)) if exhaustive
                        else self._cap_candidates(r0, c0, radius))
                if len(cand):
                    d = haversine_matrix(lat[members], lon[members], self.lat[cand], self.lon[cand])
                    best = d.argmin(axis=1)
                    best_d = d[np.arange(len(members)), best]
                    # strict: a city exactly on the cap edge could win the id tie-break
                    if exhaustive or best_d.max() < radius:
                        idx[members] = cand[best]
                        dist[members] = best_d
                        break
                radius *= 2.0
        return idx, dist


def nearest_brute_force(cities: Sequence[City], lat, lon) -> tuple[list[str], np.ndarray]:
    """Exhaustive nearest-city scan; reference for :class:`CityGrid`."""
    ordered = sorted(cities, key=lambda c: c.id)
    d = haversine_matrix(lat, lon, [c.lat for c in ordered], [c.lon for c in ordered])
    best = d.argmin(axis=1)
    return [ordered[i].id for i in best], d[np.arange(len(best)), best]


def cluster_to_cities(
    events: Sequence[EventRecord],
    cities: Sequence[City],
    span_days: int | None = None,
    cell_deg: float = 2.0,
) -> tuple[list[CitySeries], ClusterReport]:
    """Assign every event to its nearest city and build per-city series.

    Ties go to the lexicographically smallest city id. ``span_days``
    defaults to the last event day of the whole stream. Only cities
    receiving at least one event get a series; series are ordered by
    city id.
    """
    if not cities:
        raise IngestError("empty gazetteer")
    if not events:
        raise IngestError("no events")
    grid = CityGrid(cities, cell_deg=cell_deg)
    idx, dist = grid.nearest([e.lat for e in events], [e.lon for e in events])
    if span_days is None:
        span_days = max(e.day for e in events)

    per_city: dict[int, list[EventRecord]] = {}
    for e, i in zip(events, idx):
        per_city.setdefault(int(i), []).append(e)
    series = [
        CitySeries(grid.cities[i], tuple(evs), span_days)
        for i, evs in sorted(per_city.items())
    ]
    report = ClusterReport(
        assignments={n: grid.cities[i].id for n, i in enumerate(idx)},
        distances_km=tuple(float(x) for x in dist),
        mean_distance_km=float(dist.mean()),
        max_distance_km=float(dist.max()),
    )
    return series, report


def filter_sufficient(
    series: Iterable[CitySeries], min_events: int = DEFAULT_MIN_EVENTS
) -> list[CitySeries]:
    if min_events < 2:
        raise ValueError(f"min_events must be >= 2, got {min_events}")
    return [s for s in series if s.attack_count >= min_events]


# -- series files -----------------------------------------------------------

def series_to_csv(series: CitySeries) -> str:
    c = series.city
    buf = io.StringIO()
    buf.write(f"# city_id: {c.id}\n# name: {c.name}\n# country: {c.country}\n")
    buf.write(f"# city_lat: {c.lat!r}\n# city_lon: {c.lon!r}\n")
    buf.write(f"# population: {c.population}\n# span_days: {series.span_days}\n")
    buf.write(events_to_csv(series.events))
    return buf.getvalue()


def events_to_csv(events: Iterable[EventRecord]) -> str:
    lines = ["day,lat,lon,deaths"]
    lines += [f"{e.day},{e.lat!r},{e.lon!r},{e.deaths}" for e in events]
    return "\n".join(lines) + "\n"


def read_series(source: Source) -> CitySeries:
    """Inverse of :func:`series_to_csv`: metadata travels in ``#`` lines."""
    text = _read_text(source)
    meta = {}
    for line in text.splitlines():
        if line.startswith("# ") and ": " in line:
            key, _, value = line[2:].partition(": ")
            meta[key.strip()] = value
    try:
        city = City(
            meta["city_id"], meta.get("name", ""), meta.get("country", ""),
            float(meta["city_lat"]), float(meta["city_lon"]),
            int(meta.get("population", 0)),
        )
        span = int(meta["span_days"])
    except KeyError as exc:
        raise IngestError(f"series file lacks metadata field {exc}") from None
    return CitySeries(city, tuple(parse_events(text)), span)


def safe_filename(city_id: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "._-" else "_" for ch in city_id)
