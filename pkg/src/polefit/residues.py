"""Normalized residue factors, overfitting pruning, quasi-cancellation and
MIMO observability ranking.

The normalized factor rho of a term compares the magnitude of that term's
own contribution H_k against the rest of the model, both evaluated at the
term's resonance frequency (sqrt(b^2 - a^2) for a pair at a +/- jb, |a| for
a real pole). Terms with rho below a threshold are overfitting artifacts
and can be pruned; rho per observation port ranks port observability.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArgumentError,
    DegenerateResonanceError,
    EmptyModelError,
    PoleAtOriginError,
)
from .freqresp import FrequencyResponse
from .identification import FitOptions, fit_residues, identify_shared
from .rational import (
    COMPLEX_PAIR,
    REAL,
    PoleTerm,
    RationalModel,
    eval_s,
    phase_error_deg,
    zeros,
)

RHO_CSV_HEADER = ("pole_re", "pole_im", "kind", "rho", "omega_r", "verdict")

VERDICT_HIGH = "high"
VERDICT_LOW = "low"
VERDICT_OVERFIT = "overfit"

_HIGH_OBSERVABILITY = 1.0
_OVERFIT_LIMIT = 0.01
_QUASI_CANCEL_TOL = 0.01


@dataclass(frozen=True)
class RhoRecord:
    pole: complex
    kind: str
    rho: float
    omega_r: float
    pruned: bool

    @property
    def verdict(self) -> str:
        if self.rho >= _HIGH_OBSERVABILITY:
            return VERDICT_HIGH
        if self.rho >= _OVERFIT_LIMIT:
            return VERDICT_LOW
        return VERDICT_OVERFIT


@dataclass(frozen=True)
class RhoReport:
    records: tuple[RhoRecord, ...]
    threshold: float
    passes: int = 1


@dataclass(frozen=True)
class CancellationRecord:
    pole: complex
    kind: str
    nearest_zero: complex | None
    metric: float
    quasi_cancelled: bool


def _term_contribution(term: PoleTerm, s: complex) -> complex:
    h = term.residue / (s - term.pole)
    if term.kind == COMPLEX_PAIR:
        h += term.residue.conjugate() / (s - term.pole.conjugate())
    return h


def rho_complex(model: RationalModel, k: int) -> float:
    """Normalized residue factor of the complex pair at index k."""
    term = model.terms[k]
    if term.kind != COMPLEX_PAIR:
        raise ArgumentError(f"term {k} is not a complex pair")
    a, b = term.pole.real, term.pole.imag
    if b * b <= a * a:
        raise DegenerateResonanceError(
            f"pair {term.pole} has no resonance (imag^2 <= real^2)"
        )
    omega_r = math.sqrt(b * b - a * a)
    return _rho_at(model, term, omega_r)


def rho_real(model: RationalModel, k: int) -> float:
    """Normalized residue factor of the real pole at index k."""
    term = model.terms[k]
    if term.kind != REAL:
        raise ArgumentError(f"term {k} is not a real pole")
    a = term.pole.real
    if a == 0.0:
        raise PoleAtOriginError("real pole at the origin has no cutoff frequency")
    return _rho_at(model, term, abs(a))


def _rho_at(model: RationalModel, term: PoleTerm, omega_r: float) -> float:
    s = 1j * omega_r
    h_k = _term_contribution(term, s)
    h = complex(eval_s(model, s))
    denom = abs(h - h_k)
    if denom < 1e-300:
        return math.inf
    return abs(h_k) / denom


def rho_records(model: RationalModel, threshold: float = _OVERFIT_LIMIT) -> list[RhoRecord]:
    """Rho for every term; over-damped pairs fall back to omega_r = |p|."""
    records = []
    for k, term in enumerate(model.terms):
        if term.kind == REAL:
            rho = rho_real(model, k)
            omega_r = abs(term.pole.real)
        else:
            try:
                rho = rho_complex(model, k)
                a, b = term.pole.real, term.pole.imag
                omega_r = math.sqrt(b * b - a * a)
            except DegenerateResonanceError:
                omega_r = abs(term.pole)
                rho = _rho_at(model, term, omega_r)
        records.append(RhoRecord(term.pole, term.kind, rho, omega_r, pruned=rho < threshold))
    return records


def prune(
    model: RationalModel,
    response: FrequencyResponse,
    threshold: float = _OVERFIT_LIMIT,
    fixpoint: bool = False,
    options: FitOptions | None = None,
) -> tuple[RationalModel, RhoReport]:
    """Drop terms with rho below the threshold and refit the survivors.

    With ``fixpoint`` the prune-refit cycle repeats until no surviving term
    falls below the threshold; the report then covers every pass.
    """
    if options is None:
        options = FitOptions(include_d=True, include_e=(model.e != 0.0))
    current = model
    pruned_records: list[RhoRecord] = []
    passes = 0
    while True:
        passes += 1
        records = rho_records(current, threshold)
        survivors = [t for t, rec in zip(current.terms, records) if not rec.pruned]
        pruned_records.extend(rec for rec in records if rec.pruned)
        if len(survivors) == len(current.terms):
            return current, RhoReport(tuple(pruned_records + records), threshold, passes)
        if not survivors:
            report = RhoReport(tuple(pruned_records), threshold, passes)
            raise EmptyModelError("pruning removed every pole term", report=report)
        poles = []
        for t in survivors:
            poles.append(t.pole)
            if t.kind == COMPLEX_PAIR:
                poles.append(t.pole.conjugate())
        refit = fit_residues(response, poles, options)
        current = refit.with_annotations(phase_error=phase_error_deg(refit, response))
        if not fixpoint:
            final_records = rho_records(current, threshold)
            return current, RhoReport(tuple(pruned_records + final_records), threshold, passes)


def cancellation_report(model: RationalModel) -> list[CancellationRecord]:
    """Distance from each pole to the nearest model zero, normalized."""
    if model.order < 1:
        raise ArgumentError("model order must be >= 1")
    zs = zeros(model)
    f_min = model.band[0]
    floor = 2.0 * math.pi * f_min
    out = []
    for term in model.terms:
        if not zs:
            out.append(CancellationRecord(term.pole, term.kind, None, math.inf, False))
            continue
        dists = [abs(term.pole - z) for z in zs]
        i = int(np.argmin(dists))
        metric = dists[i] / max(abs(term.pole), floor)
        out.append(
            CancellationRecord(term.pole, term.kind, zs[i], metric, metric < _QUASI_CANCEL_TOL)
        )
    return out


# --- MIMO -------------------------------------------------------------------


@dataclass(frozen=True)
class MimoResult:
    """Shared-pole identification across observation ports."""

    shared_poles: tuple[complex, ...]
    labels: tuple[str, ...]
    models: tuple[RationalModel, ...]
    reports: tuple[RhoReport, ...]


@dataclass(frozen=True)
class PortRank:
    label: str
    rho: float


def mimo_identify(responses, initial_poles, options: FitOptions = FitOptions()) -> MimoResult:
    """Identify one shared pole set over several port responses.

    Pole relocation runs on the stacked system (one sigma, per-port fit
    residues and d); residues are then refitted per port and rho computed
    for every shared pole as seen from each port.
    """
    labels = []
    for i, r in enumerate(responses):
        labels.append(r.label if r.label else f"port{i}")
    poles, models = identify_shared(responses, initial_poles, options)
    reports = tuple(RhoReport(tuple(rho_records(m)), _OVERFIT_LIMIT) for m in models)
    reps = tuple(t.pole for t in models[0].terms)
    return MimoResult(reps, tuple(labels), tuple(models), reports)


def rank_ports(result: MimoResult, pole_selector) -> list[PortRank]:
    """Ports sorted by descending rho of the selected shared pole(s).

    ``pole_selector`` is a predicate on the (representative) pole value; with
    several matches a port scores its maximum rho over them. Ties keep the
    input port order.
    """
    selected = [i for i, p in enumerate(result.shared_poles) if pole_selector(p)]
    if not selected:
        raise ArgumentError("pole selector matched no shared pole")
    scored = []
    for label, report in zip(result.labels, result.reports):
        rho = max(report.records[i].rho for i in selected)
        scored.append(PortRank(label, rho))
    return sorted(scored, key=lambda pr: -pr.rho)


def save_rho_csv(report: RhoReport, path) -> None:
    """Rho report rows as ``pole_re,pole_im,kind,rho,omega_r,verdict``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RHO_CSV_HEADER)
        for rec in report.records:
            writer.writerow(
                [
                    f"{rec.pole.real:.17g}",
                    f"{rec.pole.imag:.17g}",
                    rec.kind,
                    f"{rec.rho:.17g}",
                    f"{rec.omega_r:.17g}",
                    rec.verdict,
                ]
            )
