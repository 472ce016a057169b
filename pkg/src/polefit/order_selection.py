"""Automatic model-order selection.

Two strategies are provided. The resonant baseline seeds an even number of
weakly damped complex-conjugate pairs spread over the band and grows the
order by one pair at a time. The non-resonant strategy targets responses
dominated by real poles: it starts from a single stable real pole at the
band center and grows by one real pole per iteration, re-seeding each
iteration from the previous result. Both stop as soon as the maximum phase
error over the band meets the goal; on exhaustion the best model seen is
returned flagged as not converged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .freqresp import FrequencyResponse
from .identification import FitOptions, identify
from .rational import RationalModel

_PEAK_PROMINENCE_DB = 1.0


@dataclass(frozen=True)
class OrderSelectionConfig:
    phase_goal_deg: float = 0.5
    max_order: int = 30
    fit_options: FitOptions = field(default_factory=FitOptions)
    init_real_part_ratio: float = 0.01

    def __post_init__(self):
        if self.phase_goal_deg <= 0.0:
            raise ArgumentError("phase_goal_deg must be > 0")
        if self.max_order < 1:
            raise ArgumentError("max_order must be >= 1")
        if self.init_real_part_ratio <= 0.0:
            raise ArgumentError("init_real_part_ratio must be > 0")


def estimate_initial_pairs(response: FrequencyResponse) -> int:
    """Count magnitude resonance peaks, with a floor of one pair.

    A peak is an interior local maximum of |H| in dB standing more than 1 dB
    above the lower of its two flanking minima.
    """
    if len(response) < 5:
        raise ArgumentError("need at least 5 points to estimate resonances")
    mag = np.abs(response.sample_array())
    db = 20.0 * np.log10(np.maximum(mag, 1e-300))
    n = len(db)
    count = 0
    for i in range(1, n - 1):
        if not (db[i] > db[i - 1] and db[i] > db[i + 1]):
            continue
        lo = i
        while lo > 0 and db[lo - 1] < db[lo]:
            lo -= 1
        hi = i
        while hi < n - 1 and db[hi + 1] < db[hi]:
            hi += 1
        if db[i] - min(db[lo], db[hi]) > _PEAK_PROMINENCE_DB:
            count += 1
    return max(count, 1)


def _add_distinct(poles: list[complex], new: complex) -> list[complex]:
    """Append a pole (with conjugate if complex), nudging it off near-duplicates."""
    candidate = new
    for _ in range(64):
        clash = any(
            abs(candidate - q) <= 1e-6 * max(abs(candidate), abs(q))
            or (candidate.imag != 0 and abs(candidate.conjugate() - q) <= 1e-6 * max(abs(candidate), abs(q)))
            for q in poles
        )
        if not clash:
            break
        candidate = candidate * 1.05
    out = list(poles)
    out.append(candidate)
    if candidate.imag != 0:
        out.append(candidate.conjugate())
    return out


def _finish(model: RationalModel, best: RationalModel, goal: float) -> RationalModel:
    if model.phase_error is not None and model.phase_error <= goal:
        return model.with_annotations(converged=True)
    return best.with_annotations(converged=False)


def _better(a: RationalModel | None, b: RationalModel) -> RationalModel:
    if a is None or b.phase_error < a.phase_error:
        return b
    return a


def nonresonant_order_selection(
    response: FrequencyResponse, config: OrderSelectionConfig = OrderSelectionConfig()
) -> RationalModel:
    """Order selection for responses dominated by real poles.

    Starts from a single stable real pole at the band center; every outer
    iteration re-seeds with the previous result plus one more real pole at
    the center. Real seeds may still relocate into conjugate pairs.
    """
    w_center = 2.0 * math.pi * response.grid.center_frequency()
    poles: list[complex] = [complex(-w_center)]
    opts = config.fit_options
    best: RationalModel | None = None
    model = identify(response, poles, opts)
    best = _better(best, model)
    while model.phase_error > config.phase_goal_deg and model.order < config.max_order:
        poles = _add_distinct(model.pole_list(), complex(-w_center))
        model = identify(response, poles, opts)
        best = _better(best, model)
    return _finish(model, best, config.phase_goal_deg)


def resonant_order_selection(
    response: FrequencyResponse, config: OrderSelectionConfig = OrderSelectionConfig()
) -> RationalModel:
    """Baseline order selection seeded with complex-conjugate pairs.

    The initial pair count comes from the resonance estimate; pair imaginary
    parts are spread linearly over the band (a single pair sits at the band
    center) with real parts a fixed fraction of the imaginary part. Each
    outer iteration re-seeds from the previous result plus one extra pair at
    the band center.
    """
    n_pairs = estimate_initial_pairs(response)
    w_lo = 2.0 * math.pi * response.grid.f_min
    w_hi = 2.0 * math.pi * response.grid.f_max
    w_center = 2.0 * math.pi * response.grid.center_frequency()
    ratio = config.init_real_part_ratio
    if n_pairs == 1:
        imags = [w_center]
    else:
        imags = list(np.linspace(w_lo, w_hi, n_pairs))
    poles: list[complex] = []
    for w in imags:
        poles = _add_distinct(poles, complex(-ratio * w, w))
    opts = config.fit_options
    best: RationalModel | None = None
    model = identify(response, poles, opts)
    best = _better(best, model)
    while model.phase_error > config.phase_goal_deg and model.order < config.max_order:
        poles = _add_distinct(model.pole_list(), complex(-ratio * w_center, w_center))
        model = identify(response, poles, opts)
        best = _better(best, model)
    return _finish(model, best, config.phase_goal_deg)


def select_order(response: FrequencyResponse, mode: str,
                 config: OrderSelectionConfig = OrderSelectionConfig()) -> RationalModel:
    """Dispatch on mode: 'resonant' or 'nonresonant'."""
    if mode == "resonant":
        return resonant_order_selection(response, config)
    if mode == "nonresonant":
        return nonresonant_order_selection(response, config)
    raise ArgumentError(f"unknown mode {mode!r}")
