"""Command-line front end.

Every subcommand is a thin client of the HTTP service: by default the
FastAPI app is driven in-process, and ``--server URL`` points the same
requests at a remote instance instead. File I/O (CSV responses, model
documents, pole maps, SVG plots) always happens locally on the client
side.

Exit codes: 0 success, 2 identification did not meet the phase goal
(outputs are still written), 1 any error.
"""

from __future__ import annotations

import csv
import json
import math
import os
import sys

import click
import httpx

from .errors import PolefitError
from .freqresp import load_csv, save_csv
from .rational import save_model, save_pole_csv
from .residues import RhoRecord, RhoReport, save_rho_csv
from .schemas import (
    BandFilterPayload,
    FitOptionsPayload,
    GridPayload,
    IdentifyRequest,
    McRequest,
    MimoRequest,
    PlotPolePayload,
    PlotRequest,
    PlotZeroPayload,
    ResponsePayload,
    SynthRequest,
    TemplatePayload,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 2


class ServiceClient:
    """HTTP client for the polefit service, in-process unless a URL is given."""

    def __init__(self, server: str | None = None):
        self._server = server

    def post(self, path: str, payload) -> httpx.Response:
        body = payload.model_dump(mode="json")
        if self._server:
            resp = httpx.post(f"{self._server.rstrip('/')}{path}", json=body, timeout=600.0)
        else:
            resp = _post_in_process(path, body)
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise click.ClickException(str(detail))
        return resp


def _post_in_process(path: str, body: dict) -> httpx.Response:
    """Drive the FastAPI app through its ASGI interface without a socket."""
    import asyncio

    from .service import app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://polefit") as client:
            resp = await client.post(path, json=body)
            await resp.aread()
            return resp

    return asyncio.run(go())


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_ERROR)


def _load_config(path: str | None, allowed: set[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"config {path}: {exc}")
    if not isinstance(doc, dict):
        _fail(f"config {path}: expected a JSON object")
    unknown = set(doc) - allowed
    if unknown:
        _fail(f"config {path}: unknown keys {sorted(unknown)}")
    return doc


def _pick(flag_value, config: dict, key: str, default):
    if flag_value is not None:
        return flag_value
    return config.get(key, default)


def _read_rows(path: str, wanted: dict[str, str]) -> list[dict]:
    """Read CSV rows, mapping alternative header names onto canonical ones."""
    try:
        with open(path, "r", newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                _fail(f"{path}: empty file")
            fields = {name: name for name in reader.fieldnames}
            mapping = {}
            for canonical, alternatives in wanted.items():
                for cand in alternatives.split("|"):
                    if cand in fields:
                        mapping[canonical] = cand
                        break
                else:
                    _fail(f"{path}: missing column {alternatives!r}")
            rows = []
            for raw in reader:
                rows.append({k: raw[v] for k, v in mapping.items()})
            return rows
    except OSError as exc:
        _fail(str(exc))


@click.group()
def main():
    """Pole-zero identification toolkit for amplifier stability analysis."""


_IDENTIFY_CONFIG_KEYS = {
    "mode",
    "phase_goal",
    "rho_threshold",
    "max_order",
    "weight",
    "include_e",
    "flip_unstable",
}


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(), help="Input response CSV.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output model document (JSON).")
@click.option("--mode", type=click.Choice(["resonant", "nonresonant"]), default=None)
@click.option("--phase-goal", type=float, default=None, help="Max phase error goal in degrees [0.5].")
@click.option("--rho-threshold", type=float, default=None, help="Overfitting prune threshold [0.01].")
@click.option("--max-order", type=int, default=None, help="Order cap [30].")
@click.option("--weight", type=click.Choice(["uniform", "inverse_magnitude"]), default=None)
@click.option("--include-e", is_flag=True, default=None, help="Fit the s-proportional term.")
@click.option("--flip-unstable", is_flag=True, default=None, help="Reflect RHP poles (macromodeling style).")
@click.option("--rho-out", type=click.Path(), default=None, help="Rho report CSV [<out>.rho.csv].")
@click.option("--poles-out", type=click.Path(), default=None, help="Pole CSV [<out>.poles.csv].")
@click.option("--zeros-out", type=click.Path(), default=None, help="Optional zeros CSV for plotting.")
@click.option("--config", "config_path", type=click.Path(), default=None, help="JSON run configuration.")
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def identify(in_path, out_path, mode, phase_goal, rho_threshold, max_order, weight,
             include_e, flip_unstable, rho_out, poles_out, zeros_out, config_path, server):
    """Identify a pole-residue model from a response CSV and prune overfitting."""
    cfg = _load_config(config_path, _IDENTIFY_CONFIG_KEYS)
    mode = _pick(mode, cfg, "mode", None)
    if mode is None:
        _fail("--mode is required (resonant or nonresonant)")
    try:
        response = load_csv(in_path)
    except (PolefitError, OSError) as exc:
        _fail(str(exc))
    request = IdentifyRequest(
        response=ResponsePayload.of(response),
        mode=mode,
        phase_goal_deg=_pick(phase_goal, cfg, "phase_goal", 0.5),
        max_order=_pick(max_order, cfg, "max_order", 30),
        rho_threshold=_pick(rho_threshold, cfg, "rho_threshold", 0.01),
        fit=FitOptionsPayload(
            weight_rule=_pick(weight, cfg, "weight", "uniform"),
            include_e=bool(_pick(include_e, cfg, "include_e", False)),
            flip_unstable=bool(_pick(flip_unstable, cfg, "flip_unstable", False)),
        ),
    )
    result = ServiceClient(server).post("/identify", request).json()

    from .schemas import IdentifyResult

    payload = IdentifyResult.model_validate(result)
    model = payload.model.to_model()
    save_model(model, out_path)
    records = tuple(
        RhoRecord(
            pole=row.pole.value(),
            kind=row.kind,
            rho=math.inf if row.rho is None else row.rho,
            omega_r=row.omega_r,
            pruned=row.pruned,
        )
        for row in payload.rho
    )
    save_rho_csv(RhoReport(records, request.rho_threshold), rho_out or f"{out_path}.rho.csv")
    save_pole_csv(model, poles_out or f"{out_path}.poles.csv")
    if zeros_out:
        from .errors import DegenerateModelError
        from .rational import zeros as model_zeros

        try:
            zs = model_zeros(model)
        except (PolefitError, DegenerateModelError):
            zs = []
        with open(zeros_out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["re_radps", "im_radps"])
            for z in zs:
                if z.imag >= 0:
                    writer.writerow([f"{z.real:.17g}", f"{z.imag:.17g}"])
    s = payload.stability
    click.echo(
        f"order {payload.order}  phase error {payload.phase_error_deg:.4g} deg  "
        f"stable {s.stable}  unstable {s.unstable}  critical {s.critical}"
    )
    if not payload.converged:
        click.echo("warning: phase goal not met; best model written", err=True)
        sys.exit(EXIT_NOT_CONVERGED)


_GRID_CONFIG_KEYS = {"f_start", "f_stop", "ppd", "linear_points"}
_SYNTH_CONFIG_KEYS = {"preset", "template", "seed"} | _GRID_CONFIG_KEYS


def _grid_payload(f_start, f_stop, ppd, linear_points, cfg) -> GridPayload:
    f_start = _pick(f_start, cfg, "f_start", None)
    f_stop = _pick(f_stop, cfg, "f_stop", None)
    ppd = _pick(ppd, cfg, "ppd", None)
    linear_points = _pick(linear_points, cfg, "linear_points", None)
    if f_start is None or f_stop is None:
        _fail("--f-start and --f-stop are required")
    if (ppd is None) == (linear_points is None):
        _fail("give exactly one of --ppd / --linear-points")
    return GridPayload(
        f_start=f_start, f_stop=f_stop, points_per_decade=ppd, linear_points=linear_points
    )


def _template_payload(preset_name, template_path) -> dict:
    if (preset_name is None) == (template_path is None):
        _fail("give exactly one of --preset / --template")
    if preset_name is not None:
        return {"preset": preset_name, "template": None}
    try:
        with open(template_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        return {"preset": None, "template": TemplatePayload.model_validate(doc)}
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        _fail(f"template {template_path}: {exc}")


@main.command()
@click.option("--preset", "preset_name", default=None, help="Shipped template preset name.")
@click.option("--template", "template_path", type=click.Path(), default=None, help="Template JSON document.")
@click.option("--f-start", type=float, default=None)
@click.option("--f-stop", type=float, default=None)
@click.option("--ppd", type=int, default=None, help="Log grid, points per decade.")
@click.option("--linear-points", type=int, default=None, help="Linear grid point count.")
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output response CSV.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--server", default=None)
def synth(preset_name, template_path, f_start, f_stop, ppd, linear_points, seed,
          out_path, config_path, server):
    """Generate a synthetic frequency response from a circuit template."""
    cfg = _load_config(config_path, _SYNTH_CONFIG_KEYS)
    preset_name = _pick(preset_name, cfg, "preset", None)
    source = _template_payload(preset_name, template_path)
    request = SynthRequest(
        grid=_grid_payload(f_start, f_stop, ppd, linear_points, cfg),
        seed=_pick(seed, cfg, "seed", 0),
        **source,
    )
    result = ServiceClient(server).post("/synth", request).json()
    response = ResponsePayload.model_validate(result["response"]).to_response()
    try:
        save_csv(response, out_path)
    except OSError as exc:
        _fail(str(exc))
    click.echo(f"wrote {len(response)} points to {out_path}")


_MC_CONFIG_KEYS = _SYNTH_CONFIG_KEYS | {
    "mode",
    "sigma",
    "iters",
    "phase_goal",
    "max_order",
    "rho_threshold",
    "critical_tol",
    "band_filters",
}


@main.command()
@click.option("--preset", "preset_name", default=None)
@click.option("--template", "template_path", type=click.Path(), default=None)
@click.option("--mode", type=click.Choice(["resonant", "nonresonant"]), default=None)
@click.option("--sigma", type=float, default=None, help="Relative Gaussian dispersion [0.05].")
@click.option("--iters", type=int, default=None, help="Monte-Carlo iterations.")
@click.option("--seed", type=int, default=None)
@click.option("--f-start", type=float, default=None)
@click.option("--f-stop", type=float, default=None)
@click.option("--ppd", type=int, default=None)
@click.option("--linear-points", type=int, default=None)
@click.option("--phase-goal", type=float, default=None)
@click.option("--max-order", type=int, default=None)
@click.option("--rho-threshold", type=float, default=None)
@click.option("--critical-tol", type=float, default=None, help="Half-width of the critical strip, rad/s [0].")
@click.option("--band-filter", "band_filters", multiple=True,
              help="LO:HI interval in Hz on |imag|/2pi; repeatable. Scatter stats printed per filter.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Pole map CSV.")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--server", default=None)
def mc(preset_name, template_path, mode, sigma, iters, seed, f_start, f_stop, ppd,
       linear_points, phase_goal, max_order, rho_threshold, critical_tol,
       band_filters, out_path, config_path, server):
    """Monte-Carlo stability analysis: disperse, identify, prune, aggregate."""
    cfg = _load_config(config_path, _MC_CONFIG_KEYS)
    preset_name = _pick(preset_name, cfg, "preset", None)
    mode = _pick(mode, cfg, "mode", None)
    if mode is None:
        _fail("--mode is required")
    iters = _pick(iters, cfg, "iters", None)
    if iters is None:
        _fail("--iters is required")
    filters = []
    raw_filters = list(band_filters) or cfg.get("band_filters", [])
    for item in raw_filters:
        try:
            if isinstance(item, str):
                lo, hi = (float(x) for x in item.split(":"))
            else:
                lo, hi = (float(x) for x in item)
        except ValueError:
            _fail(f"bad band filter {item!r}; expected LO:HI")
        filters.append(BandFilterPayload(f_lo=lo, f_hi=hi))
    source = _template_payload(preset_name, template_path)
    try:
        request = McRequest(
            grid=_grid_payload(f_start, f_stop, ppd, linear_points, cfg),
            mode=mode,
            sigma=_pick(sigma, cfg, "sigma", 0.05),
            iterations=iters,
            seed=_pick(seed, cfg, "seed", 0),
            phase_goal_deg=_pick(phase_goal, cfg, "phase_goal", 0.5),
            max_order=_pick(max_order, cfg, "max_order", 30),
            rho_threshold=_pick(rho_threshold, cfg, "rho_threshold", 0.01),
            critical_tol=_pick(critical_tol, cfg, "critical_tol", 0.0),
            band_filters=filters,
            **source,
        )
    except ValueError as exc:
        _fail(str(exc))
    result = ServiceClient(server).post("/mc", request).json()

    from .schemas import McResult

    payload = McResult.model_validate(result)
    try:
        with open(out_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["iteration", "pole_re_radps", "pole_im_radps", "kind", "rho", "stability"]
            )
            for row in payload.rows:
                rho = "inf" if row.rho is None else f"{row.rho:.17g}"
                writer.writerow(
                    [
                        row.iteration,
                        f"{row.pole.re:.17g}",
                        f"{row.pole.im:.17g}",
                        row.kind,
                        rho,
                        row.stability,
                    ]
                )
    except OSError as exc:
        _fail(str(exc))
    n_stable = sum(1 for r in payload.rows if r.stability == "stable")
    n_unstable = sum(1 for r in payload.rows if r.stability == "unstable")
    n_critical = sum(1 for r in payload.rows if r.stability == "critical")
    click.echo(
        f"{payload.iterations} iterations ({len(payload.failures)} failed)  "
        f"poles {len(payload.rows)}: {n_stable} stable, {n_unstable} unstable, "
        f"{n_critical} critical -> {out_path}"
    )
    for sc in payload.scatter:
        rel = abs(sc.std_re / sc.mean_re) if sc.mean_re else math.inf
        click.echo(
            f"band {sc.f_lo:g}-{sc.f_hi:g} Hz: {sc.count} poles  "
            f"mean_re {sc.mean_re:.6g}  std_re {sc.std_re:.6g}  "
            f"std_re/|mean_re| {rel:.3g}  mean_im {sc.mean_im:.6g}  std_im {sc.std_im:.6g}"
        )


@main.command()
@click.option("--poles", "pole_files", multiple=True, type=click.Path(),
              help="Pole CSV (re_radps,im_radps,kind or a pole-map CSV); repeatable.")
@click.option("--poles-lowband", "lowband_files", multiple=True, type=click.Path(),
              help="Pole CSV drawn as low-band real poles (blue).")
@click.option("--zeros", "zero_files", multiple=True, type=click.Path(), help="Zero CSV.")
@click.option("--title", default="Pole map")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output SVG.")
@click.option("--server", default=None)
def plot(pole_files, lowband_files, zero_files, title, out_path, server):
    """Render pole (and zero) CSV files as an SVG pole map."""
    if not pole_files and not lowband_files:
        _fail("give at least one --poles or --poles-lowband file")
    poles = []
    for path, lowband in [(p, False) for p in pole_files] + [(p, True) for p in lowband_files]:
        rows = _read_rows(
            path,
            {"re": "re_radps|pole_re_radps", "im": "im_radps|pole_im_radps", "kind": "kind"},
        )
        for i, row in enumerate(rows, start=2):
            try:
                poles.append(
                    PlotPolePayload(
                        re_radps=float(row["re"]),
                        im_radps=float(row["im"]),
                        kind=row["kind"],
                        lowband=lowband,
                    )
                )
            except ValueError:
                _fail(f"{path}: row {i}: non-numeric pole coordinates")
    zeros = []
    for path in zero_files:
        rows = _read_rows(path, {"re": "re_radps", "im": "im_radps"})
        for i, row in enumerate(rows, start=2):
            try:
                zeros.append(PlotZeroPayload(re_radps=float(row["re"]), im_radps=float(row["im"])))
            except ValueError:
                _fail(f"{path}: row {i}: non-numeric zero coordinates")
    request = PlotRequest(poles=poles, zeros=zeros, title=title)
    resp = ServiceClient(server).post("/plot", request)
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(resp.text)
    except OSError as exc:
        _fail(str(exc))
    click.echo(f"wrote {out_path}")


@main.command()
@click.argument("inputs", nargs=-1, type=click.Path())
@click.option("--initial-order", type=int, default=1, help="Real seed poles for the shared fit [1].")
@click.option("--select", type=click.Choice(["all", "real", "complex"]), default="real",
              help="Which shared poles drive the port ranking [real].")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Optional JSON export.")
@click.option("--server", default=None)
def mimo(inputs, initial_order, select, out_path, server):
    """Shared-pole identification over >= 2 port response CSVs; ranks ports."""
    if len(inputs) < 2:
        _fail("need at least 2 response CSV files")
    responses = []
    for path in inputs:
        try:
            r = load_csv(path)
        except (PolefitError, OSError) as exc:
            _fail(str(exc))
        if not r.label:
            r = type(r)(r.grid, r.samples, label=os.path.basename(path))
        responses.append(r)
    request = MimoRequest(
        responses=[ResponsePayload.of(r) for r in responses],
        initial_order=initial_order,
        select=select,
    )
    result = ServiceClient(server).post("/mimo", request).json()
    if out_path:
        try:
            with open(out_path, "w", encoding="utf-8") as fh:
                json.dump(result, fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            _fail(str(exc))
    click.echo("port ranking (descending rho):")
    for i, entry in enumerate(result["ranking"], start=1):
        rho = entry["rho"]
        rho_text = "inf" if rho is None else f"{rho:.6g}"
        click.echo(f"  {i}. {entry['label']}  rho={rho_text}")
    if not result["ranking"]:
        _fail("pole selector matched no shared pole")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the polefit HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
