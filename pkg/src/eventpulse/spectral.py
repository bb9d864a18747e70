"""Daily binning, Hamming-window STFT and band growth trends."""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from eventpulse.ingest import CitySeries

WINDOW_SIZE = 128
HOP = 120
FFT_POINTS = 128
DAYS_PER_YEAR = 365.25

LOW_BAND = (1 / 200, 1 / 50)
HIGH_BAND = (1 / 10, 1 / 2)

Weighting = Literal["attacks", "deaths"]
Detrend = Literal["frame", "global", "none"]


@dataclass(frozen=True)
class DailySeries:
    counts: np.ndarray
    weighting: Weighting = "attacks"

    @property
    def span_days(self) -> int:
        return len(self.counts) - 1


@dataclass(frozen=True)
class Spectrogram:
    magnitudes_sq: np.ndarray  # frames x bins
    frame_starts: np.ndarray
    freqs: np.ndarray  # cycles/day
    window_size: int = WINDOW_SIZE
    hop: int = HOP
    fft_points: int = FFT_POINTS

    @property
    def n_frames(self) -> int:
        return self.magnitudes_sq.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("frame_start_day," + ",".join(f"{f:.10g}" for f in self.freqs) + "\n")
        for start, row in zip(self.frame_starts, self.magnitudes_sq):
            buf.write(f"{int(start)}," + ",".join(f"{v:.10g}" for v in row) + "\n")
        return buf.getvalue()

    def to_svg(self, cell: int = 4) -> str:
        """Log-scaled heatmap, time on x, frequency on y (low at bottom)."""
        m = np.log10(self.magnitudes_sq + 1e-12)
        lo, hi = float(m.min()), float(m.max())
        scale = (m - lo) / (hi - lo) if hi > lo else np.zeros_like(m)
        nf, nb = m.shape
        w, h = nf * cell, nb * cell
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
            f'viewBox="0 0 {w} {h}">'
        ]
        for i in range(nf):
            for j in range(nb):
                g = int(round(255 * scale[i, j]))
                out.append(
                    f'<rect x="{i * cell}" y="{(nb - 1 - j) * cell}" width="{cell}" '
                    f'height="{cell}" fill="rgb({g},{g // 2},{255 - g})"/>'
                )
        out.append("</svg>")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class BandTrend:
    band: str
    freq_range: tuple[float, float]
    G: float  # slope of band-mean |X|^2 per year
    stderr: float

    def to_json(self) -> dict:
        return {
            "band": self.band,
            "f_lo": self.freq_range[0],
            "f_hi": self.freq_range[1],
            "G": self.G,
            "stderr": self.stderr,
        }


def bin_daily(series: CitySeries, weighting: Weighting = "attacks") -> DailySeries:
    """Per-day attack counts (or summed deaths) over days 0..span_days."""
    if weighting not in ("attacks", "deaths"):
        raise ValueError(f"unknown weighting {weighting!r}")
    days = np.array(series.days, dtype=np.int64)
    weights = None if weighting == "attacks" else np.array(series.deaths_per_attack, float)
    length = max(series.span_days, int(days.max()) if len(days) else 0) + 1
    counts = np.bincount(days, weights=weights, minlength=length)
    if weighting == "attacks":
        counts = counts.astype(np.int64)
    return DailySeries(counts, weighting)


def hamming_window(size: int) -> np.ndarray:
    """Symmetric Hamming window 0.54 - 0.46 cos(2 pi k / (size - 1))."""
    if size < 2:
        raise ValueError(f"window size must be >= 2, got {size}")
    k = np.arange(size)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * k / (size - 1))


def frame_count(length: int, window_size: int, hop: int) -> int:
    return (length - window_size) // hop + 1


def stft(
    x: DailySeries | np.ndarray,
    window_size: int = WINDOW_SIZE,
    hop: int = HOP,
    fft_points: int = FFT_POINTS,
    detrend: Detrend = "frame",
) -> Spectrogram:
    """One-sided |X(m, w)|^2 over frames starting at 0, hop, 2 hop, ...

    ``detrend`` removes the mean of each frame ("frame"), of the whole
    series ("global"), or nothing ("none") before windowing.
    """
    data = np.asarray(x.counts if isinstance(x, DailySeries) else x, dtype=float)
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    if fft_points < window_size:
        raise ValueError(f"fft_points ({fft_points}) must be >= window_size ({window_size})")
    if len(data) < window_size:
        raise ValueError(
            f"series of length {len(data)} is shorter than one window ({window_size})"
        )
    if detrend == "global":
        data = data - data.mean()
    elif detrend not in ("frame", "none"):
        raise ValueError(f"unknown detrend {detrend!r}")

    n_frames = frame_count(len(data), window_size, hop)
    starts = np.arange(n_frames) * hop
    frames = np.lib.stride_tricks.sliding_window_view(data, window_size)[starts]
    if detrend == "frame":
        frames = frames - frames.mean(axis=1, keepdims=True)
    spec = np.fft.rfft(frames * hamming_window(window_size), n=fft_points, axis=1)
    return Spectrogram(
        magnitudes_sq=np.abs(spec) ** 2,
        frame_starts=starts,
        freqs=np.fft.rfftfreq(fft_points, d=1.0),
        window_size=window_size,
        hop=hop,
        fft_points=fft_points,
    )


def band_growth(spec: Spectrogram, band: tuple[float, float], name: str = "") -> BandTrend:
    """Least-squares slope of the band-mean spectrogram value against
    frame-centre time, expressed per year."""
    f_lo, f_hi = band
    if not (0.0 <= f_lo <= f_hi <= 0.5):
        raise ValueError(f"band {band} outside [0, 0.5] cycles/day")
    if f_hi > spec.freqs[-1] or f_lo < spec.freqs[0]:
        raise ValueError(f"band {band} outside spectrogram range")
    sel = (spec.freqs >= f_lo) & (spec.freqs <= f_hi)
    if not sel.any():
        raise ValueError(f"band {band} contains no frequency bins")
    if spec.n_frames < 3:
        raise ValueError(f"need at least 3 frames, got {spec.n_frames}")

    y = spec.magnitudes_sq[:, sel].mean(axis=1)
    t = (spec.frame_starts + spec.window_size / 2.0) / DAYS_PER_YEAR
    tc = t - t.mean()
    sxx = float((tc**2).sum())
    slope = float((tc * (y - y.mean())).sum()) / sxx
    resid = y - y.mean() - slope * tc
    stderr = math.sqrt(float((resid**2).sum()) / (len(y) - 2) / sxx)
    return BandTrend(name, (float(f_lo), float(f_hi)), slope, stderr)
