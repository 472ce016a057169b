"""Monte-Carlo dispersion of template parameters with batch identification.

Each iteration draws its own RNG stream from (seed, iteration index), so
results are reproducible and independent of execution order or worker
count. Component values (R, C, f0, Q, gain) get independent Gaussian
multipliers; nonpositive draws are rejected and redrawn from the same
stream. Per-iteration identification failures are recorded in the map
rather than aborting the batch.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ArgumentError, PolefitError
from .freqresp import FrequencyGrid
from .order_selection import OrderSelectionConfig, select_order
from .residues import prune
from .synth import CircuitTemplate, Resonator, ThermalCell, synth_response

POLE_MAP_CSV_HEADER = (
    "iteration",
    "pole_re_radps",
    "pole_im_radps",
    "kind",
    "rho",
    "stability",
)

STABLE = "stable"
UNSTABLE = "unstable"
CRITICAL = "critical"


@dataclass(frozen=True)
class DispersionSpec:
    relative_sigma: float = 0.05
    distribution: str = "gaussian"
    iterations: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.relative_sigma < 0.0:
            raise ArgumentError("relative_sigma must be >= 0")
        if self.distribution != "gaussian":
            raise ArgumentError(f"unknown distribution {self.distribution!r}")
        if self.iterations < 1:
            raise ArgumentError("iterations must be >= 1")


@dataclass(frozen=True)
class PoleRecord:
    pole: complex
    kind: str
    rho: float
    stability: str


@dataclass(frozen=True)
class McIteration:
    index: int
    poles: tuple[PoleRecord, ...]
    failed: bool = False
    error: str | None = None


@dataclass(frozen=True)
class PoleMap:
    iterations: tuple[McIteration, ...]
    band: tuple[float, float]
    mode: str
    seed: int

    @property
    def n_failed(self) -> int:
        return sum(1 for it in self.iterations if it.failed)

    def all_records(self) -> list[PoleRecord]:
        out: list[PoleRecord] = []
        for it in self.iterations:
            out.extend(it.poles)
        return out


@dataclass(frozen=True)
class ScatterStats:
    mean_re: float
    std_re: float
    mean_im: float
    std_im: float
    count: int


def stability_tag(pole: complex, critical_tol: float = 0.0) -> str:
    if pole.real > critical_tol:
        return UNSTABLE
    if pole.real < -critical_tol:
        return STABLE
    return CRITICAL


def classify_stability(poles, critical_tol: float = 0.0) -> dict[str, int]:
    """Counts of stable / unstable / critical poles at the given tolerance."""
    if critical_tol < 0.0:
        raise ArgumentError("critical_tol must be >= 0")
    counts = {STABLE: 0, UNSTABLE: 0, CRITICAL: 0}
    for p in poles:
        counts[stability_tag(complex(p), critical_tol)] += 1
    return counts


def _dispersed_value(nominal: float, sigma: float, rng: np.random.Generator) -> float:
    if sigma == 0.0:
        return nominal
    for _ in range(1000):
        value = nominal * (1.0 + sigma * rng.standard_normal())
        if value > 0.0:
            return value
    raise ArgumentError("could not draw a positive parameter value")


def _disperse_template(template: CircuitTemplate, sigma: float, rng: np.random.Generator) -> CircuitTemplate:
    thermal = tuple(
        ThermalCell(_dispersed_value(c.R, sigma, rng), _dispersed_value(c.C, sigma, rng))
        for c in template.thermal_cells
    )
    traps = tuple(
        ThermalCell(_dispersed_value(c.R, sigma, rng), _dispersed_value(c.C, sigma, rng))
        for c in template.trap_cells
    )
    resonators = tuple(
        Resonator(
            _dispersed_value(r.f0, sigma, rng),
            _dispersed_value(r.Q, sigma, rng),
            _dispersed_value(r.gain, sigma, rng),
        )
        for r in template.resonators
    )
    return replace(template, thermal_cells=thermal, trap_cells=traps, resonators=resonators)


def resolve_workers(cap: int | None, iterations: int) -> int:
    """Worker count for an MC batch; cap of 0 (or None) means auto."""
    if cap is None or cap == 0:
        cap = os.cpu_count() or 1
    if cap < 0:
        raise ArgumentError("worker cap must be >= 0")
    return max(1, min(cap, iterations))


def run_mc(
    template: CircuitTemplate,
    dispersion: DispersionSpec,
    grid: FrequencyGrid,
    mode: str,
    config: OrderSelectionConfig = OrderSelectionConfig(),
    rho_threshold: float = 0.01,
    critical_tol: float = 0.0,
    max_workers: int | None = 1,
) -> PoleMap:
    """Disperse, synthesize, identify and prune once per iteration.

    The returned map holds the pruned pole set of every iteration with its
    rho and stability tag; failed iterations carry the error text instead.
    """
    if mode not in ("resonant", "nonresonant"):
        raise ArgumentError(f"unknown mode {mode!r}")

    def worker(index: int) -> McIteration:
        # One stream per iteration, derived from (seed, index): parameter
        # draws first, then the synthesis noise seed. Iterations of noiseless
        # templates at zero dispersion are bit-identical.
        rng = np.random.default_rng(np.random.SeedSequence((dispersion.seed, index)))
        t_i = _disperse_template(template, dispersion.relative_sigma, rng)
        noise_seed = int(rng.integers(0, 2**63 - 1))
        try:
            resp = synth_response(t_i, grid, noise_seed)
            model = select_order(resp, mode, config)
            pruned, report = prune(model, resp, rho_threshold)
        except (PolefitError, np.linalg.LinAlgError) as exc:
            return McIteration(index, (), failed=True, error=str(exc))
        survivors = report.records[-len(pruned.terms):]
        records = tuple(
            PoleRecord(t.pole, t.kind, rec.rho, stability_tag(t.pole, critical_tol))
            for t, rec in zip(pruned.terms, survivors)
        )
        return McIteration(index, records)

    n_workers = resolve_workers(max_workers, dispersion.iterations)
    indices = range(dispersion.iterations)
    if n_workers == 1:
        results = [worker(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(worker, indices))
    results.sort(key=lambda it: it.index)
    return PoleMap(
        tuple(results),
        band=(grid.f_min, grid.f_max),
        mode=mode,
        seed=dispersion.seed,
    )


def scatter_stats(pole_map: PoleMap, band_filter: tuple[float, float]) -> ScatterStats:
    """Sample statistics of the poles whose |imag|/2pi falls in the filter.

    Conjugate pairs are stored once (positive-imag member) and counted once.
    """
    lo, hi = band_filter
    if lo > hi:
        raise ArgumentError("band filter must satisfy lo <= hi")
    res = []
    ims = []
    for rec in pole_map.all_records():
        f_im = abs(rec.pole.imag) / (2.0 * math.pi)
        if lo <= f_im <= hi:
            res.append(rec.pole.real)
            ims.append(abs(rec.pole.imag))
    if not res:
        raise ArgumentError("no poles inside the band filter")
    res_arr = np.asarray(res)
    ims_arr = np.asarray(ims)
    n = len(res_arr)
    std_re = float(np.std(res_arr, ddof=1)) if n > 1 else 0.0
    std_im = float(np.std(ims_arr, ddof=1)) if n > 1 else 0.0
    return ScatterStats(
        mean_re=float(np.mean(res_arr)),
        std_re=std_re,
        mean_im=float(np.mean(ims_arr)),
        std_im=std_im,
        count=n,
    )


def save_pole_map_csv(pole_map: PoleMap, path) -> None:
    """Rows of ``iteration,pole_re_radps,pole_im_radps,kind,rho,stability``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(POLE_MAP_CSV_HEADER)
        for it in pole_map.iterations:
            for rec in it.poles:
                writer.writerow(
                    [
                        it.index,
                        f"{rec.pole.real:.17g}",
                        f"{rec.pole.imag:.17g}",
                        rec.kind,
                        f"{rec.rho:.17g}",
                        rec.stability,
                    ]
                )
