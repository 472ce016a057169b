"""Analytic circuit templates standing in for harmonic-balance simulation.

A template composes Foster-form RC cells (thermal and trap networks, one
real pole each), second-order resonators, periodic images of the slow real
poles shifted to multiples of the drive frequency, a direct term, and
optional additive complex Gaussian noise. Everything is an exact rational
function when noise is disabled, so identification results can be checked
against the template's own poles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, FormatError
from .freqresp import FrequencyGrid, FrequencyResponse


@dataclass(frozen=True)
class ThermalCell:
    """Parallel RC cell of a Foster network: pole -1/(RC), residue 1/C."""

    R: float
    C: float

    def __post_init__(self):
        if self.R <= 0.0 or self.C <= 0.0:
            raise ArgumentError("RC cell needs R > 0 and C > 0")

    @property
    def pole(self) -> float:
        return -1.0 / (self.R * self.C)

    @property
    def residue(self) -> float:
        return 1.0 / self.C


@dataclass(frozen=True)
class Resonator:
    """Band-pass section gain*(w0/Q)s / (s^2 + (w0/Q)s + w0^2)."""

    f0: float
    Q: float
    gain: float

    def __post_init__(self):
        if self.f0 <= 0.0 or self.Q <= 0.0:
            raise ArgumentError("resonator needs f0 > 0 and Q > 0")


@dataclass(frozen=True)
class FloquetImageSpec:
    """Images of the slow real poles at multiples of the drive frequency.

    ``observability_scale`` shrinks the image residues relative to the base
    cell residue; ``cancellation_offset`` is the surviving fraction after a
    compensating term places a near-zero on each image.
    """

    f_in: float
    n_max: int
    observability_scale: float = 1.0
    cancellation_offset: float = 1.0

    def __post_init__(self):
        if self.f_in <= 0.0:
            raise ArgumentError("f_in must be > 0")
        if self.n_max < 0:
            raise ArgumentError("n_max must be >= 0")
        if self.observability_scale < 0.0:
            raise ArgumentError("observability_scale must be >= 0")


@dataclass(frozen=True)
class CircuitTemplate:
    thermal_cells: tuple[ThermalCell, ...] = ()
    trap_cells: tuple[ThermalCell, ...] = ()
    resonators: tuple[Resonator, ...] = ()
    floquet: FloquetImageSpec | None = None
    direct_term: float = 0.0
    noise_floor_db: float = -math.inf
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "thermal_cells", tuple(self.thermal_cells))
        object.__setattr__(self, "trap_cells", tuple(self.trap_cells))
        object.__setattr__(self, "resonators", tuple(self.resonators))


def thermal_cell_poles(cells) -> list[tuple[complex, complex]]:
    """Foster-form (pole, residue) pairs: Z(s) = sum R_i/(1 + s R_i C_i)."""
    return [(complex(c.pole), complex(c.residue)) for c in cells]


def floquet_images(epsilon: float, spec: FloquetImageSpec) -> list[complex]:
    """Pole set {-eps} plus images {-eps +/- j*2*pi*n*f_in, n = 1..n_max}."""
    if epsilon <= 0.0:
        raise ArgumentError("epsilon must be > 0")
    out = [complex(-epsilon)]
    for n in range(1, spec.n_max + 1):
        w = 2.0 * math.pi * n * spec.f_in
        out.append(complex(-epsilon, w))
        out.append(complex(-epsilon, -w))
    return out


def _resonator_pole_residues(res: Resonator) -> list[tuple[complex, complex]]:
    w0 = 2.0 * math.pi * res.f0
    k = res.gain * w0 / res.Q
    roots = np.roots([1.0, w0 / res.Q, w0 * w0])
    p1, p2 = complex(roots[0]), complex(roots[1])
    if abs(p1 - p2) < 1e-12 * abs(p1):
        raise ArgumentError("critically damped resonator has a repeated pole")
    return [(p1, k * p1 / (p1 - p2)), (p2, k * p2 / (p2 - p1))]


def template_poles(template: CircuitTemplate) -> list[tuple[complex, complex]]:
    """Exact (pole, residue) pairs of the template, conjugates included."""
    out = thermal_cell_poles(template.thermal_cells)
    out += thermal_cell_poles(template.trap_cells)
    for res in template.resonators:
        out += _resonator_pole_residues(res)
    if template.floquet is not None and template.floquet.n_max >= 1:
        fl = template.floquet
        net = fl.observability_scale * fl.cancellation_offset
        for cell in template.thermal_cells:
            for n in range(1, fl.n_max + 1):
                w = 2.0 * math.pi * n * fl.f_in
                r = complex(cell.residue * net)
                out.append((complex(cell.pole, w), r))
                out.append((complex(cell.pole, -w), r))
    return out


def synth_response(template: CircuitTemplate, grid: FrequencyGrid, seed: int = 0) -> FrequencyResponse:
    """Evaluate the template on a grid, with seeded complex Gaussian noise.

    The image terms are built as (cell residue x observability_scale) minus
    the compensating (1 - cancellation_offset) copy, which leaves a weak pole
    quasi-cancelled by a nearby zero of the composite response.
    """
    s = 2j * math.pi * grid.asarray()
    h = np.full(len(s), complex(template.direct_term), dtype=complex)
    for cell in list(template.thermal_cells) + list(template.trap_cells):
        h += cell.residue / (s - cell.pole)
    for res in template.resonators:
        w0 = 2.0 * math.pi * res.f0
        k = res.gain * w0 / res.Q
        h += k * s / (s * s + (w0 / res.Q) * s + w0 * w0)
    if template.floquet is not None and template.floquet.n_max >= 1:
        fl = template.floquet
        for cell in template.thermal_cells:
            base = cell.residue * fl.observability_scale
            for n in range(1, fl.n_max + 1):
                w = 2.0 * math.pi * n * fl.f_in
                image = base / (s - complex(cell.pole, w)) + base / (s - complex(cell.pole, -w))
                h += image - (1.0 - fl.cancellation_offset) * image
    if template.noise_floor_db != -math.inf:
        rng = np.random.default_rng(seed)
        sigma = float(np.max(np.abs(h))) * 10.0 ** (template.noise_floor_db / 20.0)
        noise = (rng.standard_normal(len(s)) + 1j * rng.standard_normal(len(s))) * (sigma / math.sqrt(2.0))
        h = h + noise
    return FrequencyResponse(grid, tuple(h), label=template.label)


# --- serialization ----------------------------------------------------------

_TEMPLATE_KEYS = {
    "thermal_cells",
    "trap_cells",
    "resonators",
    "floquet",
    "direct_term",
    "noise_floor_db",
    "label",
}


def template_to_dict(template: CircuitTemplate) -> dict:
    doc = {
        "thermal_cells": [{"R": c.R, "C": c.C} for c in template.thermal_cells],
        "trap_cells": [{"R": c.R, "C": c.C} for c in template.trap_cells],
        "resonators": [
            {"f0": r.f0, "Q": r.Q, "gain": r.gain} for r in template.resonators
        ],
        "direct_term": template.direct_term,
        "noise_floor_db": None
        if template.noise_floor_db == -math.inf
        else template.noise_floor_db,
        "label": template.label,
    }
    if template.floquet is not None:
        fl = template.floquet
        doc["floquet"] = {
            "f_in": fl.f_in,
            "n_max": fl.n_max,
            "observability_scale": fl.observability_scale,
            "cancellation_offset": fl.cancellation_offset,
        }
    else:
        doc["floquet"] = None
    return doc


def template_from_dict(doc: dict) -> CircuitTemplate:
    unknown = set(doc) - _TEMPLATE_KEYS
    if unknown:
        raise FormatError(f"unknown template keys: {sorted(unknown)}")
    try:
        floquet = None
        if doc.get("floquet") is not None:
            floquet = FloquetImageSpec(**doc["floquet"])
        nf = doc.get("noise_floor_db")
        return CircuitTemplate(
            thermal_cells=tuple(ThermalCell(**c) for c in doc.get("thermal_cells", [])),
            trap_cells=tuple(ThermalCell(**c) for c in doc.get("trap_cells", [])),
            resonators=tuple(Resonator(**r) for r in doc.get("resonators", [])),
            floquet=floquet,
            direct_term=float(doc.get("direct_term", 0.0)),
            noise_floor_db=-math.inf if nf is None else float(nf),
            label=str(doc.get("label", "")),
        )
    except (TypeError, ArgumentError) as exc:
        raise FormatError(f"bad template document: {exc}") from None


def _cell_for_cutoff(f_cut: float, R: float) -> ThermalCell:
    return ThermalCell(R=R, C=1.0 / (2.0 * math.pi * f_cut * R))


PRESETS: dict[str, CircuitTemplate] = {
    # Low-frequency band of a Doherty-style design: two slow real poles
    # (thermal plus trap emission), mild background, nearly noiseless.
    "doherty_low": CircuitTemplate(
        thermal_cells=(_cell_for_cutoff(300e3, 5.0),),
        trap_cells=(_cell_for_cutoff(1.5e6, 2.0),),
        direct_term=0.5,
        noise_floor_db=-120.0,
        label="doherty_low",
    ),
    # Two-branch GaN HEMT amplifier analog: one thermal pole with a 1 MHz
    # cutoff whose weak, quasi-cancelled images sit at the 1 GHz drive.
    "gan_hemt": CircuitTemplate(
        thermal_cells=(_cell_for_cutoff(1e6, 10.0),),
        floquet=FloquetImageSpec(
            f_in=1e9, n_max=1, observability_scale=1e-3, cancellation_offset=1e-3
        ),
        direct_term=1.0,
        noise_floor_db=-100.0,
        label="gan_hemt",
    ),
    # Same amplifier with the electro-thermal model disabled: no slow real
    # pole and, with it, no images at the drive frequency.
    "gan_hemt_nothermal": CircuitTemplate(
        floquet=FloquetImageSpec(
            f_in=1e9, n_max=1, observability_scale=1e-3, cancellation_offset=1e-3
        ),
        direct_term=1.0,
        noise_floor_db=-100.0,
        label="gan_hemt_nothermal",
    ),
}

PRESET_BANDS: dict[str, tuple[float, float]] = {
    "doherty_low": (50e3, 10e6),
    "gan_hemt": (101e3, 1.2e9),
    "gan_hemt_nothermal": (101e3, 1.2e9),
}


def preset(name: str) -> CircuitTemplate:
    try:
        return PRESETS[name]
    except KeyError:
        raise ArgumentError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
