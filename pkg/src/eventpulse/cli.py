"""Command-line pipeline: synth -> ingest -> fit -> predict -> spectrogram -> report.

Exit codes: 0 success, 2 input error, 3 insufficient data.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

from eventpulse import __version__
from eventpulse.distfit import (
    FitError,
    fit_exponential,
    fit_power_law,
    interval_attack_regression,
    population_correlation,
)
from eventpulse.ingest import (
    DEFAULT_MIN_EVENTS,
    CitySeries,
    IngestError,
    cluster_to_cities,
    events_to_csv,
    filter_sufficient,
    parse_events,
    parse_gazetteer,
    read_series,
    safe_filename,
    series_to_csv,
)
from eventpulse.predict import (
    DEFAULT_BINS,
    MIN_KL_SAMPLES,
    PredictiveDensity,
    exponential_entropy,
    kl_empirical,
    nats_to_bits,
    quantile_next,
)
from eventpulse.spectral import (
    FFT_POINTS,
    HIGH_BAND,
    HOP,
    LOW_BAND,
    WINDOW_SIZE,
    band_growth,
    bin_daily,
    stft,
)
from eventpulse import synth

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INSUFFICIENT = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


# -- file helpers -------------------------------------------------------------

def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def envelope(args: argparse.Namespace, **payload) -> dict:
    echo = {
        k: (str(v) if isinstance(v, Path) else [str(p) for p in v] if isinstance(v, list) else v)
        for k, v in sorted(vars(args).items())
        if k not in ("func", "jobs")
    }
    return {"tool_version": __version__, "config_echo": echo, **payload}


def _read_bytes(path: Path, what: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {what} {path}: {exc.strerror}") from None


def load_series_dir(series_dir: Path) -> list[CitySeries]:
    if not Path(series_dir).is_dir():
        raise CliError(f"series directory not found: {series_dir}")
    files = sorted(Path(series_dir).glob("*.csv"))
    if not files:
        raise CliError(f"no series files in {series_dir}")
    out = []
    for f in files:
        try:
            out.append(read_series(f.read_bytes()))
        except IngestError as exc:
            raise CliError(f"{f}: {exc}") from None
    return out


def pool_map(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _float_pair(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from None
    if not 0.0 <= lo <= hi <= 0.5:
        raise argparse.ArgumentTypeError(f"band {text!r} must satisfy 0 <= lo <= hi <= 0.5")
    return lo, hi


def _quantiles(text: str) -> list[float]:
    try:
        qs = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad quantile list {text!r}") from None
    if not all(0.0 < q < 1.0 for q in qs):
        raise argparse.ArgumentTypeError("quantiles must lie in (0, 1)")
    return qs


def quantile_key(q: float) -> str:
    return "p" + format(round(q * 100, 9), "g")


# -- ingest -------------------------------------------------------------------

def cmd_ingest(args) -> int:
    gaz_bytes = _read_bytes(args.gazetteer, "gazetteer")
    ev_bytes = _read_bytes(args.events, "events")
    try:
        cities = parse_gazetteer(gaz_bytes)
    except IngestError as exc:
        raise CliError(f"{args.gazetteer}: {exc}") from None
    try:
        events = parse_events(ev_bytes)
    except IngestError as exc:
        raise CliError(f"{args.events}: {exc}") from None
    if not events:
        raise CliError("no events")
    series, report = cluster_to_cities(events, cities)

    out = Path(args.out)
    for s in series:
        write_atomic(out / "series" / f"{safe_filename(s.city.id)}.csv", series_to_csv(s))
    write_atomic(out / "cluster_report.json", dump_json(envelope(args, **report.to_json())))
    print(f"clustered {len(events)} events to {len(series)} cities; "
          f"mean distance {report.mean_distance_km:.3f} km, max {report.max_distance_km:.3f} km")
    return EXIT_OK


# -- fit ----------------------------------------------------------------------

def fit_city(s: CitySeries) -> dict:
    """Interval and intensity fits for one city (pool worker)."""
    row = {
        "city_id": s.city.id,
        "attack_count": s.attack_count,
        "span_days": s.span_days,
        "population": s.city.population,
    }
    try:
        row.update(fit_exponential(s.intervals).to_json())
    except FitError as exc:
        return {"skip": str(exc), **row}
    try:
        pl = fit_power_law(s.deaths_per_attack)
        row.update(alpha=pl.alpha, x_min=pl.x_min, n_tail=pl.n_tail, ks_distance=pl.ks_distance)
    except FitError as exc:
        row.update(alpha=None, x_min=None, n_tail=None, power_law_error=str(exc))
    try:
        row["deaths_exponential"] = fit_exponential(s.deaths_per_attack).to_json()
    except FitError:
        row["deaths_exponential"] = None
    return row


def cmd_fit(args) -> int:
    all_series = load_series_dir(args.series_dir)
    kept = filter_sufficient(all_series, args.min_events)
    kept_ids = {s.city.id for s in kept}
    skipped = [
        {"city_id": s.city.id, "attack_count": s.attack_count,
         "reason": f"fewer than {args.min_events} events"}
        for s in all_series if s.city.id not in kept_ids
    ]
    rows = pool_map(fit_city, kept, args.jobs)
    cities, fitted = [], []
    for s, row in zip(kept, rows):
        if "skip" in row:
            skipped.append({"city_id": row["city_id"], "attack_count": row["attack_count"],
                            "reason": row.pop("skip")})
        else:
            cities.append(row)
            fitted.append(s)
    skipped.sort(key=lambda r: r["city_id"])
    if not cities:
        raise CliError(f"no city has at least {args.min_events} usable events", EXIT_INSUFFICIENT)

    def summary(fn):
        try:
            return fn(fitted).to_json()
        except FitError:
            return None

    payload = envelope(
        args,
        cities=cities,
        skipped=skipped,
        interval_attack_regression=summary(interval_attack_regression),
        population_correlation=summary(population_correlation),
    )
    write_atomic(Path(args.out), dump_json(payload))
    print(f"fitted {len(cities)} cities, skipped {len(skipped)}")
    return EXIT_OK


# -- predict ------------------------------------------------------------------

def predict_city(row: dict, mode: str, quantiles: Sequence[float], intervals, bins: int) -> dict:
    density = PredictiveDensity(mode, float(row["mu_hat"]), int(row["n"]))
    entropy = exponential_entropy(density.mu)
    kl = None
    if intervals is not None and len(intervals) >= MIN_KL_SAMPLES:
        try:
            kl = kl_empirical(intervals, density.mu, bins)
        except ValueError:
            kl = None
    return {
        "city_id": row["city_id"],
        "mode": mode,
        "mu": density.mu,
        "n": density.n,
        "quantiles": {quantile_key(q): quantile_next(q, density) for q in quantiles},
        "entropy_nats": entropy,
        "entropy_bits": nats_to_bits(entropy),
        "kl_nats": kl,
        "kl_bits": None if kl is None else nats_to_bits(kl),
    }


def cmd_predict(args) -> int:
    try:
        fits = json.loads(_read_bytes(args.fits, "fits"))
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.fits}: invalid JSON ({exc})") from None
    if "cities" not in fits:
        raise CliError(f"{args.fits}: not a fits file")
    series_dir = args.series_dir or fits.get("config_echo", {}).get("series_dir")
    intervals = {}
    if series_dir and Path(series_dir).is_dir():
        for f in sorted(Path(series_dir).glob("*.csv")):
            s = read_series(f.read_bytes())
            intervals[s.city.id] = s.intervals
    preds = [
        predict_city(row, args.mode, args.quantiles, intervals.get(row["city_id"]), args.bins)
        for row in fits["cities"]
    ]
    write_atomic(Path(args.out), dump_json(envelope(args, predictions=preds)))
    print(f"predicted {len(preds)} cities ({args.mode})")
    return EXIT_OK


# -- spectrogram --------------------------------------------------------------

def spectrogram_city(s: CitySeries, args) -> None:
    daily = bin_daily(s, args.weighting)
    hop = args.window - args.overlap if args.overlap is not None else args.hop
    if len(daily.counts) < args.window:
        raise CliError(
            f"city {s.city.id}: series of {len(daily.counts)} days is shorter than "
            f"the required window length {args.window}",
            EXIT_INSUFFICIENT,
        )
    spec = stft(daily, args.window, hop, args.fft, detrend=args.detrend)
    if spec.n_frames < 3:
        raise CliError(
            f"city {s.city.id}: {spec.n_frames} frames; band trends need 3, i.e. at least "
            f"{args.window + 2 * hop} days",
            EXIT_INSUFFICIENT,
        )
    trends = [band_growth(spec, args.low_band, "low"), band_growth(spec, args.high_band, "high")]
    out = Path(args.out_dir)
    stem = safe_filename(s.city.id)
    write_atomic(out / f"{stem}_spectrogram.csv", spec.to_csv())
    payload = envelope(
        args,
        city_id=s.city.id,
        weighting=args.weighting,
        n_frames=spec.n_frames,
        hop=hop,
        bands=[t.to_json() for t in trends],
    )
    write_atomic(out / f"{stem}_bands.json", dump_json(payload))
    if args.svg:
        write_atomic(out / f"{stem}_spectrogram.svg", spec.to_svg())


def _spectrogram_worker(item):
    s, args = item
    try:
        spectrogram_city(s, args)
        return None
    except CliError as exc:
        return exc.code, str(exc)


def cmd_spectrogram(args) -> int:
    if args.overlap is not None and not 0 <= args.overlap < args.window:
        raise CliError("--overlap must lie in [0, window)")
    if args.fft < args.window:
        raise CliError("--fft must be >= --window")
    series = []
    for f in args.series or []:
        try:
            series.append(read_series(_read_bytes(f, "series")))
        except IngestError as exc:
            raise CliError(f"{f}: {exc}") from None
    if args.series_dir:
        series += load_series_dir(args.series_dir)
    if not series:
        raise CliError("no series given (use --series or --series-dir)")
    for result in pool_map(_spectrogram_worker, [(s, args) for s in series], args.jobs):
        if result is not None:
            raise CliError(result[1], result[0])
    print(f"wrote spectrograms for {len(series)} series to {args.out_dir}")
    return EXIT_OK


# -- synth --------------------------------------------------------------------

def cmd_synth(args) -> int:
    try:
        cities = synth.lattice_cities(args.cities, args.seed)
        specs = synth.fleet_specs(
            args.cities, args.seed, args.min_attacks, args.max_attacks, args.span_days,
            args.alpha, args.x_min, args.rate_ramp, args.jitter_deg,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None
    fleet = synth.gen_fleet(specs, cities)
    events = sorted(e for s in fleet for e in s.events)
    out = Path(args.out_dir)
    write_atomic(out / "events.csv", events_to_csv(events))
    gaz = ["id,name,country,lat,lon,population"]
    gaz += [f"{c.id},{c.name},{c.country},{c.lat!r},{c.lon!r},{c.population}" for c in cities]
    write_atomic(out / "gazetteer.csv", "\n".join(gaz) + "\n")
    meta = envelope(
        args,
        rng=synth.rng_metadata(),
        specs=[
            {"city_id": c.id, "seed": s.seed + i, "mu": s.mu, "alpha": s.alpha,
             "x_min": s.x_min, "span_days": s.span_days, "rate_ramp": s.rate_ramp}
            for i, (s, c) in enumerate(zip(specs, cities))
        ],
    )
    write_atomic(out / "synth_meta.json", dump_json(meta))
    print(f"generated {len(events)} events for {len(cities)} cities")
    return EXIT_OK


# -- report -------------------------------------------------------------------

def _fmt(x, spec=".4g") -> str:
    if x is None:
        return "-"
    if isinstance(x, str):
        return x
    return format(x, spec)


def _load_json(path: Path) -> dict | None:
    if not path.is_file():
        return None
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})") from None


def cmd_report(args) -> int:
    run = Path(args.run_dir)
    if not run.is_dir():
        raise CliError(f"run directory not found: {run}")
    cluster = _load_json(run / "cluster_report.json")
    fits = _load_json(run / "fits.json")
    preds = _load_json(run / "predictions.json")
    bands = [_load_json(p) for p in sorted(run.glob("**/*_bands.json"))]
    if not any([cluster, fits, preds, bands]):
        raise CliError(f"no pipeline outputs found in {run}")

    lines = [f"# Incident statistics report", "", f"tool version {__version__}", ""]
    if cluster:
        lines += [
            "## Clustering", "",
            f"- events: {len(cluster['assignments'])}",
            f"- cities hit: {len(set(cluster['assignments'].values()))}",
            f"- mean distance: {cluster['mean_distance_km']:.3f} km",
            f"- max distance: {cluster['max_distance_km']:.3f} km", "",
        ]
    if fits:
        lines += ["## Fits", "",
                  "| city | A | mu_hat (days) | 95% bounds | alpha | x_min | n_tail |",
                  "|---|---|---|---|---|---|---|"]
        for r in fits["cities"]:
            lines.append(
                f"| {r['city_id']} | {r['attack_count']} | {_fmt(r['mu_hat'])} | "
                f"[{_fmt(r['ci_lower'])}, {_fmt(r['ci_upper'])}] | {_fmt(r['alpha'])} | "
                f"{_fmt(r['x_min'], 'd')} | {_fmt(r['n_tail'], 'd')} |"
            )
        lines.append("")
        for key, label in [("interval_attack_regression", "mu_hat vs T/A"),
                           ("population_correlation", "attacks vs population")]:
            reg = fits.get(key)
            if reg:
                lines.append(f"- {label}: slope {_fmt(reg['slope'])}, intercept "
                             f"{_fmt(reg['intercept'])}, adjusted R^2 {_fmt(reg['adj_r2'])} (K={reg['k']})")
            else:
                lines.append(f"- {label}: not enough cities")
        if fits["skipped"]:
            lines.append(f"- skipped cities: {len(fits['skipped'])}")
        lines.append("")
    if preds:
        rows = preds["predictions"]
        qkeys = sorted({k for r in rows for k in r["quantiles"]}, key=lambda k: float(k[1:]))
        lines += ["## Next-event prediction", "",
                  "| city | mode | " + " | ".join(qkeys) + " | entropy (nats) | K-L (nats) | K-L (bits) |",
                  "|---|---|" + "---|" * (len(qkeys) + 3)]
        for r in rows:
            qs = " | ".join(_fmt(r["quantiles"].get(k)) for k in qkeys)
            lines.append(f"| {r['city_id']} | {r['mode']} | {qs} | {_fmt(r['entropy_nats'])} | "
                         f"{_fmt(r['kl_nats'])} | {_fmt(r['kl_bits'])} |")
        lines.append("")
    if bands:
        lines += ["## Spectral band growth (per year)", "",
                  "| city | frames | band | f range (cycles/day) | G | stderr |",
                  "|---|---|---|---|---|---|"]
        for b in bands:
            for t in b["bands"]:
                lines.append(f"| {b['city_id']} | {b['n_frames']} | {t['band']} | "
                             f"[{_fmt(t['f_lo'])}, {_fmt(t['f_hi'])}] | {_fmt(t['G'])} | "
                             f"{_fmt(t['stderr'])} |")
        lines.append("")
    write_atomic(Path(args.out), "\n".join(lines))
    print(f"wrote {args.out}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("EVENTPULSE_JOBS", "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eventpulse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--jobs", type=int, default=_default_jobs(),
                       help="worker processes (env EVENTPULSE_JOBS)")
        p.set_defaults(func=func)
        return p

    p = add("ingest", cmd_ingest, "cluster events to cities, write per-city series")
    p.add_argument("--events", type=Path, required=True)
    p.add_argument("--gazetteer", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = add("fit", cmd_fit, "fit interval and intensity distributions")
    p.add_argument("--series-dir", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="fits.json path")
    p.add_argument("--min-events", type=int, default=DEFAULT_MIN_EVENTS)

    p = add("predict", cmd_predict, "next-event quantiles, entropy and K-L loss")
    p.add_argument("--fits", type=Path, required=True)
    p.add_argument("--series-dir", type=Path, default=None,
                   help="series used for empirical K-L (default: the one fits.json was built from)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--mode", choices=["ML", "CNML"], default="CNML")
    p.add_argument("--quantiles", type=_quantiles, default=[0.1, 0.5, 0.9])
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)

    p = add("spectrogram", cmd_spectrogram, "STFT spectrogram and band growth trends")
    p.add_argument("--series", type=Path, nargs="*")
    p.add_argument("--series-dir", type=Path, default=None)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--window", type=int, default=WINDOW_SIZE)
    hop = p.add_mutually_exclusive_group()
    hop.add_argument("--hop", type=int, default=HOP, help="frame advance in days")
    hop.add_argument("--overlap", type=int, default=None,
                     help="overlap in days; sets hop = window - overlap")
    p.add_argument("--fft", type=int, default=FFT_POINTS)
    p.add_argument("--weighting", choices=["attacks", "deaths"], default="attacks")
    p.add_argument("--detrend", choices=["frame", "global", "none"], default="frame")
    p.add_argument("--low-band", type=_float_pair, default=LOW_BAND)
    p.add_argument("--high-band", type=_float_pair, default=HIGH_BAND)
    p.add_argument("--svg", action="store_true", help="also write an SVG heatmap")

    p = add("synth", cmd_synth, "generate a seeded synthetic fleet")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--cities", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--span-days", type=int, default=4677)
    p.add_argument("--alpha", type=float, default=2.5)
    p.add_argument("--x-min", type=int, default=1)
    p.add_argument("--rate-ramp", type=float, default=0.0)
    p.add_argument("--min-attacks", type=int, default=141)
    p.add_argument("--max-attacks", type=int, default=3983)
    p.add_argument("--jitter-deg", type=float, default=0.05)

    p = add("report", cmd_report, "aggregate JSON outputs into Markdown")
    p.add_argument("--run-dir", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"eventpulse {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
