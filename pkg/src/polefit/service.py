"""FastAPI service exposing identification, synthesis, MC and plotting.

The CLI is a thin client of this app; a shared instance can serve several
designers or a simulator post-processing pipeline. All endpoints are
synchronous CPU-bound work and deterministic given the request payload.
"""

from __future__ import annotations

import math
import os

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import __version__
from .errors import ArgumentError, PolefitError
from .montecarlo import classify_stability, run_mc, scatter_stats
from .order_selection import select_order
from .residues import mimo_identify, prune, rank_ports
from .schemas import (
    ComplexPayload,
    IdentifyRequest,
    IdentifyResult,
    McRequest,
    McResult,
    MimoPortPayload,
    MimoRequest,
    MimoResultPayload,
    ModelPayload,
    PlotRequest,
    RankEntry,
    RhoRowPayload,
    ScatterPayload,
    StabilityCounts,
    SynthRequest,
    SynthResult,
    ResponsePayload,
)
from .svgplot import PlotPole, PlotZero, render_pole_map
from .synth import PRESETS, preset, synth_response

app = FastAPI(
    title="polefit",
    version=__version__,
    description="Pole-zero identification service for amplifier stability analysis",
)


@app.exception_handler(PolefitError)
def _domain_error(_request: Request, exc: PolefitError) -> JSONResponse:
    return JSONResponse(
        status_code=400,
        content={"detail": str(exc), "error_kind": type(exc).__name__},
    )


def _worker_cap() -> int:
    return int(os.environ.get("POLEFIT_THREADS", "0"))


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.get("/presets")
def presets() -> dict:
    return {"presets": sorted(PRESETS)}


@app.post("/identify", response_model=IdentifyResult)
def identify_endpoint(req: IdentifyRequest) -> IdentifyResult:
    response = req.response.to_response()
    model = select_order(response, req.mode, req.to_config())
    pruned, report = prune(model, response, req.rho_threshold)
    pruned = pruned.with_annotations(converged=model.converged)
    counts = classify_stability([t.pole for t in pruned.terms])
    return IdentifyResult(
        model=ModelPayload.of(pruned),
        rho=[RhoRowPayload.of(rec) for rec in report.records],
        stability=StabilityCounts(**counts),
        converged=model.converged,
        order=pruned.order,
        phase_error_deg=pruned.phase_error,
    )


@app.post("/synth", response_model=SynthResult)
def synth_endpoint(req: SynthRequest) -> SynthResult:
    template = preset(req.preset) if req.preset else req.template.to_template()
    response = synth_response(template, req.grid.to_grid(), req.seed)
    return SynthResult(response=ResponsePayload.of(response))


@app.post("/mc", response_model=McResult)
def mc_endpoint(req: McRequest) -> McResult:
    template = preset(req.preset) if req.preset else req.template.to_template()
    pole_map = run_mc(
        template,
        req.to_dispersion(),
        req.grid.to_grid(),
        req.mode,
        config=req.to_config(),
        rho_threshold=req.rho_threshold,
        critical_tol=req.critical_tol,
        max_workers=_worker_cap(),
    )
    scatter = [
        ScatterPayload.of((bf.f_lo, bf.f_hi), scatter_stats(pole_map, (bf.f_lo, bf.f_hi)))
        for bf in req.band_filters
    ]
    return McResult.of(pole_map, scatter)


@app.post("/mimo", response_model=MimoResultPayload)
def mimo_endpoint(req: MimoRequest) -> MimoResultPayload:
    if len(req.responses) < 2:
        raise ArgumentError("need at least 2 port responses")
    responses = [r.to_response() for r in req.responses]
    grid = responses[0].grid
    # seed with initial_order real poles spread over the band
    w_center = 2.0 * math.pi * grid.center_frequency()
    initial = [complex(-w_center * (1.05**j)) for j in range(req.initial_order)]
    result = mimo_identify(responses, initial, req.fit.to_options())
    selector = {
        "all": lambda p: True,
        "real": lambda p: p.imag == 0,
        "complex": lambda p: p.imag != 0,
    }[req.select]
    try:
        ranking = rank_ports(result, selector)
        rank_payload = [
            RankEntry(label=pr.label, rho=None if math.isinf(pr.rho) else pr.rho)
            for pr in ranking
        ]
    except PolefitError:
        rank_payload = []
    ports = [
        MimoPortPayload(
            label=label,
            model=ModelPayload.of(model),
            rho=[RhoRowPayload.of(rec) for rec in report.records],
        )
        for label, model, report in zip(result.labels, result.models, result.reports)
    ]
    return MimoResultPayload(
        shared_poles=[ComplexPayload.of(p) for p in result.shared_poles],
        ports=ports,
        ranking=rank_payload,
    )


@app.post("/plot")
def plot_endpoint(req: PlotRequest) -> Response:
    poles = [PlotPole(p.re_radps, p.im_radps, p.kind, p.lowband) for p in req.poles]
    zeros = [PlotZero(z.re_radps, z.im_radps) for z in req.zeros]
    svg = render_pole_map(poles, zeros, title=req.title)
    return Response(content=svg, media_type="image/svg+xml")
