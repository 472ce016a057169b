"""Frequency grids, sampled responses, CSV I/O and band splitting."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, FormatError

CSV_HEADER = ("freq_hz", "re", "im")

_REL_TOL = 1e-12


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing, positive frequency points in Hz."""

    points: tuple[float, ...]
    scale_tag: str = "linear"

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        object.__setattr__(self, "points", pts)
        if self.scale_tag not in ("linear", "log"):
            raise ArgumentError(f"unknown scale_tag {self.scale_tag!r}")
        if len(pts) < 2:
            raise ArgumentError("grid needs at least 2 points")
        if pts[0] <= 0.0:
            raise ArgumentError("grid frequencies must be positive")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ArgumentError("grid frequencies must be strictly increasing")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def f_min(self) -> float:
        return self.points[0]

    @property
    def f_max(self) -> float:
        return self.points[-1]

    def asarray(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def center_frequency(self) -> float:
        """Band center: geometric mean on log grids, arithmetic mean otherwise."""
        if self.scale_tag == "log":
            return math.sqrt(self.f_min * self.f_max)
        return 0.5 * (self.f_min + self.f_max)


@dataclass(frozen=True)
class FrequencyResponse:
    """Complex transfer-function samples H(j2*pi*f) on a frequency grid."""

    grid: FrequencyGrid
    samples: tuple[complex, ...]
    label: str = ""

    def __post_init__(self):
        samples = tuple(complex(v) for v in self.samples)
        object.__setattr__(self, "samples", samples)
        if len(samples) != len(self.grid):
            raise ArgumentError(
                f"{len(samples)} samples for {len(self.grid)} grid points"
            )
        arr = np.asarray(samples)
        if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
            raise ArgumentError("samples must be finite")

    def __len__(self) -> int:
        return len(self.samples)

    def sample_array(self) -> np.ndarray:
        return np.asarray(self.samples, dtype=complex)


def make_log_grid(f_start: float, f_stop: float, points_per_decade: int) -> FrequencyGrid:
    """Log-spaced grid with ``points_per_decade`` points per decade inclusive.

    Spacing in log10 is 1/(points_per_decade - 1); the sweep is truncated at
    ``f_stop``, which is appended exactly unless the last generated point is
    already within 1e-12 relative of it.
    """
    if not (0.0 < f_start < f_stop):
        raise ArgumentError("need 0 < f_start < f_stop")
    if points_per_decade < 2:
        raise ArgumentError("points_per_decade must be >= 2")
    delta = 1.0 / (points_per_decade - 1)
    span = (math.log10(f_stop) - math.log10(f_start)) / delta
    ks = np.arange(math.floor(span) + 2, dtype=float)
    pts = f_start * np.power(10.0, ks * delta)
    pts[0] = f_start
    pts = pts[pts <= f_stop * (1.0 + _REL_TOL)]
    points = list(pts)
    if abs(points[-1] - f_stop) > _REL_TOL * f_stop:
        points.append(f_stop)
    return FrequencyGrid(tuple(points), scale_tag="log")


def make_linear_grid(f_start: float, f_stop: float, n_points: int) -> FrequencyGrid:
    """Linearly spaced grid with exact endpoints."""
    if not (0.0 < f_start < f_stop):
        raise ArgumentError("need 0 < f_start < f_stop")
    if n_points < 2:
        raise ArgumentError("n_points must be >= 2")
    pts = np.linspace(f_start, f_stop, n_points)
    return FrequencyGrid(tuple(pts), scale_tag="linear")


def _infer_scale_tag(freqs: np.ndarray) -> str:
    """Log if consecutive ratios are more uniform than consecutive differences."""
    if len(freqs) == 2:
        return "linear"
    ratios = freqs[1:] / freqs[:-1]
    diffs = np.diff(freqs)

    def _cv(x: np.ndarray) -> float:
        m = float(np.mean(x))
        return float(np.std(x) / m) if m != 0.0 else math.inf

    return "log" if _cv(ratios) < _cv(diffs) else "linear"


def load_csv(path) -> FrequencyResponse:
    """Read a response from a ``freq_hz,re,im`` CSV file."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise FormatError(
                f"{path}: expected header 'freq_hz,re,im', got {','.join(header)!r}"
            )
        freqs: list[float] = []
        samples: list[complex] = []
        for i, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise FormatError(f"{path}: row {i}: expected 3 columns, got {len(row)}")
            try:
                f, re, im = (float(c) for c in row)
            except ValueError:
                raise FormatError(f"{path}: row {i}: non-numeric cell") from None
            freqs.append(f)
            samples.append(complex(re, im))
    arr = np.asarray(freqs)
    if len(arr) >= 2 and np.any(np.diff(arr) <= 0):
        raise FormatError(f"{path}: non-monotonic frequency column")
    try:
        grid = FrequencyGrid(tuple(freqs), scale_tag=_infer_scale_tag(arr) if len(arr) >= 2 else "linear")
        return FrequencyResponse(grid, tuple(samples))
    except ArgumentError as exc:
        raise FormatError(f"{path}: {exc}") from None


def save_csv(response: FrequencyResponse, path) -> None:
    """Write a response as ``freq_hz,re,im`` with 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for f, h in zip(response.grid.points, response.samples):
            writer.writerow([f"{f:.17g}", f"{h.real:.17g}", f"{h.imag:.17g}"])


def band_split(response: FrequencyResponse, f_cut: float) -> tuple[FrequencyResponse, FrequencyResponse]:
    """Split into a low band (points < f_cut plus the first point >= f_cut,
    anchoring the cut in both fits) and a high band (points >= f_cut)."""
    pts = response.grid.asarray()
    if not (pts[0] < f_cut < pts[-1]):
        raise ArgumentError(f"f_cut {f_cut} not strictly inside [{pts[0]}, {pts[-1]}]")
    split = int(np.searchsorted(pts, f_cut, side="left"))
    low_idx = slice(0, split + 1)
    high_idx = slice(split, len(pts))
    if split + 1 < 2 or len(pts) - split < 2:
        raise ArgumentError("each band needs at least 2 points")
    tag = response.grid.scale_tag

    def _part(idx: slice) -> FrequencyResponse:
        return FrequencyResponse(
            FrequencyGrid(tuple(pts[idx]), scale_tag=tag),
            tuple(response.samples[idx]),
            label=response.label,
        )

    return _part(low_idx), _part(high_idx)
