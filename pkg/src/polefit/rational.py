"""Pole-residue transfer functions: evaluation, zeros, phase-error metric, I/O."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    ArgumentError,
    DegenerateModelError,
    EvaluationError,
    FormatError,
    MetricError,
)
from .freqresp import FrequencyResponse

REAL = "real"
COMPLEX_PAIR = "complex_pair"

_SINGULARITY_TOL = 1e-300

POLE_CSV_HEADER = ("re_radps", "im_radps", "kind")


@dataclass(frozen=True)
class PoleTerm:
    """One real pole or one complex-conjugate pair (stored once, imag > 0)."""

    kind: str
    pole: complex
    residue: complex

    def __post_init__(self):
        object.__setattr__(self, "pole", complex(self.pole))
        object.__setattr__(self, "residue", complex(self.residue))
        if self.kind == REAL:
            if self.pole.imag != 0.0 or self.residue.imag != 0.0:
                raise ArgumentError("real term must have real pole and residue")
        elif self.kind == COMPLEX_PAIR:
            if self.pole.imag <= 0.0:
                raise ArgumentError("complex pair must be stored with imag > 0")
        else:
            raise ArgumentError(f"unknown term kind {self.kind!r}")

    @property
    def order(self) -> int:
        return 1 if self.kind == REAL else 2


@dataclass(frozen=True)
class RationalModel:
    """H(s) = sum of pole-residue terms + d + s*e, real-rational by construction.

    ``band`` is the (f_min, f_max) interval in Hz the model was fitted on.
    ``phase_error`` and ``converged`` are annotations set by the fitting and
    order-selection stages.
    """

    terms: tuple[PoleTerm, ...]
    d: float = 0.0
    e: float = 0.0
    band: tuple[float, float] = (0.0, 0.0)
    phase_error: float | None = None
    converged: bool = True

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "e", float(self.e))
        object.__setattr__(self, "band", (float(self.band[0]), float(self.band[1])))

    @property
    def order(self) -> int:
        return sum(t.order for t in self.terms)

    def pole_list(self) -> list[complex]:
        """All poles with conjugates expanded."""
        out: list[complex] = []
        for t in self.terms:
            out.append(t.pole)
            if t.kind == COMPLEX_PAIR:
                out.append(t.pole.conjugate())
        return out

    def with_annotations(self, phase_error: float | None = None,
                         converged: bool | None = None) -> "RationalModel":
        kw = {}
        if phase_error is not None:
            kw["phase_error"] = phase_error
        if converged is not None:
            kw["converged"] = converged
        return replace(self, **kw)


def eval_s(model: RationalModel, s) -> np.ndarray | complex:
    """Evaluate H at arbitrary complex s (scalar or array)."""
    s_arr = np.asarray(s, dtype=complex)
    h = np.full(s_arr.shape, complex(model.d), dtype=complex)
    h += model.e * s_arr
    for t in model.terms:
        dist = s_arr - t.pole
        if np.min(np.abs(dist)) < _SINGULARITY_TOL:
            raise EvaluationError(f"evaluation at pole {t.pole}")
        h += t.residue / dist
        if t.kind == COMPLEX_PAIR:
            dist_c = s_arr - t.pole.conjugate()
            if np.min(np.abs(dist_c)) < _SINGULARITY_TOL:
                raise EvaluationError(f"evaluation at pole {t.pole.conjugate()}")
            h += t.residue.conjugate() / dist_c
    if np.isscalar(s) or s_arr.shape == ():
        return complex(h)
    return h


def evaluate(model: RationalModel, f: float) -> complex:
    """Evaluate H(j*2*pi*f) at a frequency in Hz."""
    if f < 0.0:
        raise ArgumentError("frequency must be >= 0")
    return complex(eval_s(model, 2j * math.pi * f))


def sample_response(model: RationalModel, grid) -> np.ndarray:
    """Model samples over a FrequencyGrid."""
    return np.asarray(eval_s(model, 2j * math.pi * grid.asarray()))


def phase_error_deg(model: RationalModel, response: FrequencyResponse) -> float:
    """Max over the grid of the wrapped model-vs-data phase difference, degrees."""
    h_data = response.sample_array()
    if float(np.min(np.abs(h_data))) < _SINGULARITY_TOL:
        raise MetricError("phase undefined: data sample with zero magnitude")
    h_model = sample_response(model, response.grid)
    err = np.angle(h_model * np.conj(h_data))
    return float(np.degrees(np.max(np.abs(err))))


def _numerator_coefficients(model: RationalModel) -> tuple[np.ndarray, float]:
    """Expanded numerator over the common denominator, in a scaled s-domain.

    Returns (coefficients highest power first, frequency scale w0) such that
    the physical zeros are ``w0 * roots(coefficients)``.
    """
    poles = model.pole_list()
    mags = [abs(p) for p in poles if abs(p) > 0.0]
    w0 = math.exp(sum(math.log(m) for m in mags) / len(mags)) if mags else 1.0
    p_hat = np.asarray([p / w0 for p in poles], dtype=complex)
    res_hat: list[complex] = []
    for t in model.terms:
        res_hat.append(t.residue / w0)
        if t.kind == COMPLEX_PAIR:
            res_hat.append(t.residue.conjugate() / w0)
    # (d + e*w0*s_hat) * prod(s_hat - p_hat) + sum_k r_hat_k * prod_{j != k}
    num = np.polymul([model.e * w0, model.d], np.poly(p_hat)) if len(p_hat) else np.asarray(
        [model.e * w0, model.d], dtype=complex
    )
    for k, r in enumerate(res_hat):
        others = np.delete(p_hat, k)
        num = np.polyadd(num, r * np.poly(others))
    num = np.atleast_1d(num)
    scale = float(np.max(np.abs(num))) if len(num) else 0.0
    if scale > 0.0 and float(np.max(np.abs(num.imag))) > 1e-8 * scale:
        raise ArgumentError("numerator expansion lost conjugate symmetry")
    return np.real(num), w0


def zeros(model: RationalModel) -> list[complex]:
    """Zeros of H(s): roots of the numerator over the common denominator."""
    if model.order < 1:
        raise ArgumentError("model order must be >= 1")
    if all(t.residue == 0 for t in model.terms) and model.d == 0.0 and model.e == 0.0:
        raise DegenerateModelError("all residues, d and e are zero")
    num, w0 = _numerator_coefficients(model)
    scale = float(np.max(np.abs(num)))
    if scale == 0.0:
        return []
    keep = np.abs(num) > 1e-12 * scale
    first = int(np.argmax(keep))
    trimmed = num[first:]
    if len(trimmed) < 2:
        return []
    roots = np.roots(trimmed)
    return [complex(z * w0) for z in roots]


# --- serialization ---------------------------------------------------------


def model_to_dict(model: RationalModel) -> dict:
    return {
        "terms": [
            {
                "kind": t.kind,
                "pole": {"re": t.pole.real, "im": t.pole.imag},
                "residue": {"re": t.residue.real, "im": t.residue.imag},
            }
            for t in model.terms
        ],
        "d": model.d,
        "e": model.e,
        "band_hz": [model.band[0], model.band[1]],
        "order": model.order,
        "phase_error_deg": model.phase_error,
        "converged": model.converged,
    }


def model_from_dict(doc: dict) -> RationalModel:
    try:
        terms = tuple(
            PoleTerm(
                kind=t["kind"],
                pole=complex(t["pole"]["re"], t["pole"]["im"]),
                residue=complex(t["residue"]["re"], t["residue"]["im"]),
            )
            for t in doc["terms"]
        )
        band = (doc["band_hz"][0], doc["band_hz"][1])
        model = RationalModel(
            terms,
            d=doc.get("d", 0.0),
            e=doc.get("e", 0.0),
            band=band,
            phase_error=doc.get("phase_error_deg"),
            converged=doc.get("converged", True),
        )
    except (KeyError, TypeError, ArgumentError) as exc:
        raise FormatError(f"bad model document: {exc}") from None
    return model


def save_model(model: RationalModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path) -> RationalModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    return model_from_dict(doc)


def save_pole_csv(model: RationalModel, path) -> None:
    """Pole coordinates as ``re_radps,im_radps,kind`` (pairs listed once)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(POLE_CSV_HEADER)
        for t in model.terms:
            writer.writerow([f"{t.pole.real:.17g}", f"{t.pole.imag:.17g}", t.kind])
