"""Pydantic request/response models for the HTTP service and run configs.

These models are the wire format of the service and double as the validated
run-configuration documents accepted by the CLI (unknown keys are rejected).
Infinite rho values travel as ``null``.
"""

from __future__ import annotations

import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .freqresp import FrequencyGrid, FrequencyResponse, make_linear_grid, make_log_grid
from .identification import FitOptions
from .montecarlo import DispersionSpec, PoleMap, ScatterStats
from .order_selection import OrderSelectionConfig
from .rational import PoleTerm, RationalModel
from .synth import CircuitTemplate, template_from_dict, template_to_dict


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ComplexPayload(StrictModel):
    re: float
    im: float = 0.0

    @classmethod
    def of(cls, z: complex) -> "ComplexPayload":
        return cls(re=z.real, im=z.imag)

    def value(self) -> complex:
        return complex(self.re, self.im)


class ResponsePayload(StrictModel):
    freq_hz: list[float]
    re: list[float]
    im: list[float]
    label: str = ""

    @classmethod
    def of(cls, response: FrequencyResponse) -> "ResponsePayload":
        h = response.sample_array()
        return cls(
            freq_hz=list(response.grid.points),
            re=[float(v) for v in h.real],
            im=[float(v) for v in h.imag],
            label=response.label,
        )

    def to_response(self) -> FrequencyResponse:
        from .freqresp import _infer_scale_tag

        freqs = np.asarray(self.freq_hz, dtype=float)
        tag = _infer_scale_tag(freqs) if len(freqs) >= 2 else "linear"
        samples = tuple(complex(r, i) for r, i in zip(self.re, self.im))
        return FrequencyResponse(FrequencyGrid(tuple(self.freq_hz), tag), samples, self.label)


class GridPayload(StrictModel):
    f_start: float
    f_stop: float
    points_per_decade: Optional[int] = None
    linear_points: Optional[int] = None

    @model_validator(mode="after")
    def _one_rule(self):
        if (self.points_per_decade is None) == (self.linear_points is None):
            raise ValueError("give exactly one of points_per_decade / linear_points")
        return self

    def to_grid(self) -> FrequencyGrid:
        if self.points_per_decade is not None:
            return make_log_grid(self.f_start, self.f_stop, self.points_per_decade)
        return make_linear_grid(self.f_start, self.f_stop, self.linear_points)


class FitOptionsPayload(StrictModel):
    include_d: bool = True
    include_e: bool = False
    weight_rule: Literal["uniform", "inverse_magnitude"] = "uniform"
    max_relocation_iters: int = 20
    pole_motion_tol: float = 1e-8
    flip_unstable: bool = False

    def to_options(self) -> FitOptions:
        return FitOptions(**self.model_dump())


class TermPayload(StrictModel):
    kind: Literal["real", "complex_pair"]
    pole: ComplexPayload
    residue: ComplexPayload


class ModelPayload(StrictModel):
    terms: list[TermPayload]
    d: float
    e: float
    band_hz: tuple[float, float]
    order: int
    phase_error_deg: Optional[float] = None
    converged: bool = True

    @classmethod
    def of(cls, model: RationalModel) -> "ModelPayload":
        return cls(
            terms=[
                TermPayload(
                    kind=t.kind,
                    pole=ComplexPayload.of(t.pole),
                    residue=ComplexPayload.of(t.residue),
                )
                for t in model.terms
            ],
            d=model.d,
            e=model.e,
            band_hz=model.band,
            order=model.order,
            phase_error_deg=model.phase_error,
            converged=model.converged,
        )

    def to_model(self) -> RationalModel:
        return RationalModel(
            tuple(
                PoleTerm(t.kind, t.pole.value(), t.residue.value()) for t in self.terms
            ),
            d=self.d,
            e=self.e,
            band=self.band_hz,
            phase_error=self.phase_error_deg,
            converged=self.converged,
        )


class RhoRowPayload(StrictModel):
    pole: ComplexPayload
    kind: str
    rho: Optional[float] = Field(default=None, description="null means infinite")
    omega_r: float
    pruned: bool
    verdict: str

    @classmethod
    def of(cls, rec) -> "RhoRowPayload":
        return cls(
            pole=ComplexPayload.of(rec.pole),
            kind=rec.kind,
            rho=None if math.isinf(rec.rho) else rec.rho,
            omega_r=rec.omega_r,
            pruned=rec.pruned,
            verdict=rec.verdict,
        )


class RcCellPayload(StrictModel):
    R: float
    C: float


class ResonatorPayload(StrictModel):
    f0: float
    Q: float
    gain: float


class FloquetPayload(StrictModel):
    f_in: float
    n_max: int
    observability_scale: float = 1.0
    cancellation_offset: float = 1.0


class TemplatePayload(StrictModel):
    thermal_cells: list[RcCellPayload] = Field(default_factory=list)
    trap_cells: list[RcCellPayload] = Field(default_factory=list)
    resonators: list[ResonatorPayload] = Field(default_factory=list)
    floquet: Optional[FloquetPayload] = None
    direct_term: float = 0.0
    noise_floor_db: Optional[float] = Field(default=None, description="null means no noise")
    label: str = ""

    @classmethod
    def of(cls, template: CircuitTemplate) -> "TemplatePayload":
        return cls.model_validate(template_to_dict(template))

    def to_template(self) -> CircuitTemplate:
        return template_from_dict(self.model_dump())


class IdentifyRequest(StrictModel):
    response: ResponsePayload
    mode: Literal["resonant", "nonresonant"]
    phase_goal_deg: float = 0.5
    max_order: int = 30
    init_real_part_ratio: float = 0.01
    rho_threshold: float = 0.01
    fit: FitOptionsPayload = Field(default_factory=FitOptionsPayload)

    def to_config(self) -> OrderSelectionConfig:
        return OrderSelectionConfig(
            phase_goal_deg=self.phase_goal_deg,
            max_order=self.max_order,
            fit_options=self.fit.to_options(),
            init_real_part_ratio=self.init_real_part_ratio,
        )


class StabilityCounts(StrictModel):
    stable: int
    unstable: int
    critical: int


class IdentifyResult(StrictModel):
    model: ModelPayload
    rho: list[RhoRowPayload]
    stability: StabilityCounts
    converged: bool
    order: int
    phase_error_deg: Optional[float]


class SynthRequest(StrictModel):
    preset: Optional[str] = None
    template: Optional[TemplatePayload] = None
    grid: GridPayload
    seed: int = 0

    @model_validator(mode="after")
    def _one_source(self):
        if (self.preset is None) == (self.template is None):
            raise ValueError("give exactly one of preset / template")
        return self


class SynthResult(StrictModel):
    response: ResponsePayload


class BandFilterPayload(StrictModel):
    f_lo: float
    f_hi: float


class McRequest(StrictModel):
    preset: Optional[str] = None
    template: Optional[TemplatePayload] = None
    grid: GridPayload
    mode: Literal["resonant", "nonresonant"]
    sigma: float = 0.05
    iterations: int = 1
    seed: int = 0
    phase_goal_deg: float = 0.5
    max_order: int = 30
    init_real_part_ratio: float = 0.01
    rho_threshold: float = 0.01
    critical_tol: float = 0.0
    band_filters: list[BandFilterPayload] = Field(default_factory=list)
    fit: FitOptionsPayload = Field(default_factory=FitOptionsPayload)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.preset is None) == (self.template is None):
            raise ValueError("give exactly one of preset / template")
        return self

    def to_dispersion(self) -> DispersionSpec:
        return DispersionSpec(
            relative_sigma=self.sigma, iterations=self.iterations, seed=self.seed
        )

    def to_config(self) -> OrderSelectionConfig:
        return OrderSelectionConfig(
            phase_goal_deg=self.phase_goal_deg,
            max_order=self.max_order,
            fit_options=self.fit.to_options(),
            init_real_part_ratio=self.init_real_part_ratio,
        )


class PoleMapRow(StrictModel):
    iteration: int
    pole: ComplexPayload
    kind: str
    rho: Optional[float]
    stability: str


class McFailure(StrictModel):
    iteration: int
    error: str


class ScatterPayload(StrictModel):
    f_lo: float
    f_hi: float
    mean_re: float
    std_re: float
    mean_im: float
    std_im: float
    count: int

    @classmethod
    def of(cls, band: tuple[float, float], stats: ScatterStats) -> "ScatterPayload":
        return cls(
            f_lo=band[0],
            f_hi=band[1],
            mean_re=stats.mean_re,
            std_re=stats.std_re,
            mean_im=stats.mean_im,
            std_im=stats.std_im,
            count=stats.count,
        )


class McResult(StrictModel):
    rows: list[PoleMapRow]
    failures: list[McFailure]
    scatter: list[ScatterPayload]
    iterations: int
    mode: str
    band_hz: tuple[float, float]

    @classmethod
    def of(cls, pole_map: PoleMap, scatter: list[ScatterPayload]) -> "McResult":
        rows = []
        failures = []
        for it in pole_map.iterations:
            if it.failed:
                failures.append(McFailure(iteration=it.index, error=it.error or ""))
                continue
            for rec in it.poles:
                rows.append(
                    PoleMapRow(
                        iteration=it.index,
                        pole=ComplexPayload.of(rec.pole),
                        kind=rec.kind,
                        rho=None if math.isinf(rec.rho) else rec.rho,
                        stability=rec.stability,
                    )
                )
        return cls(
            rows=rows,
            failures=failures,
            scatter=scatter,
            iterations=len(pole_map.iterations),
            mode=pole_map.mode,
            band_hz=pole_map.band,
        )


class MimoRequest(StrictModel):
    responses: list[ResponsePayload]
    initial_order: int = 1
    select: Literal["all", "real", "complex"] = "real"
    fit: FitOptionsPayload = Field(default_factory=FitOptionsPayload)


class MimoPortPayload(StrictModel):
    label: str
    model: ModelPayload
    rho: list[RhoRowPayload]


class RankEntry(StrictModel):
    label: str
    rho: Optional[float]


class MimoResultPayload(StrictModel):
    shared_poles: list[ComplexPayload]
    ports: list[MimoPortPayload]
    ranking: list[RankEntry]


class PlotPolePayload(StrictModel):
    re_radps: float
    im_radps: float
    kind: str = "real"
    lowband: bool = False


class PlotZeroPayload(StrictModel):
    re_radps: float
    im_radps: float


class PlotRequest(StrictModel):
    poles: list[PlotPolePayload]
    zeros: list[PlotZeroPayload] = Field(default_factory=list)
    title: str = "Pole map"
