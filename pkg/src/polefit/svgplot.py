"""Self-contained SVG pole-map rendering.

SVG is generated directly (no plotting dependency) so output is textual,
diffable and structurally checkable in tests. Poles are crosses: red for
right-half-plane, green otherwise, blue for low-band real poles merged in
from a non-resonant identification. Zeros are open circles. The imaginary
axis is expressed in GHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

COLOR_STABLE = "#2ca02c"
COLOR_UNSTABLE = "#d62728"
COLOR_LOWBAND = "#1f77b4"
COLOR_ZERO = "#555555"

_GHZ = 1e9


@dataclass(frozen=True)
class PlotPole:
    re_radps: float
    im_radps: float
    kind: str = "real"
    lowband: bool = False

    @property
    def css_class(self) -> str:
        if self.lowband and self.kind == "real":
            return "pole lowband"
        return "pole unstable" if self.re_radps > 0.0 else "pole stable"

    @property
    def color(self) -> str:
        if self.lowband and self.kind == "real":
            return COLOR_LOWBAND
        return COLOR_UNSTABLE if self.re_radps > 0.0 else COLOR_STABLE


@dataclass(frozen=True)
class PlotZero:
    re_radps: float
    im_radps: float


def _mirrored(points):
    """Expand conjugate representatives into both half-planes for display."""
    out = []
    for p in points:
        out.append(p)
        if p.im_radps != 0.0:
            out.append(
                PlotPole(p.re_radps, -p.im_radps, p.kind, p.lowband)
                if isinstance(p, PlotPole)
                else PlotZero(p.re_radps, -p.im_radps)
            )
    return out


def _axis_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _fmt(v: float) -> str:
    return f"{v:.4g}"


def render_pole_map(
    poles,
    zeros=(),
    title: str = "Pole map",
    width: int = 860,
    height: int = 560,
) -> str:
    """Render poles (PlotPole) and zeros (PlotZero) to an SVG document string."""
    poles = _mirrored(list(poles))
    zeros = _mirrored(list(zeros))

    margin_l, margin_r, margin_t, margin_b = 90, 180, 50, 70
    plot_w = width - margin_l - margin_r
    plot_h = height - margin_t - margin_b

    xs = [p.re_radps for p in poles] + [z.re_radps for z in zeros]
    ys = [p.im_radps / _GHZ / (2.0 * math.pi) for p in poles] + [
        z.im_radps / _GHZ / (2.0 * math.pi) for z in zeros
    ]
    if not xs:
        xs, ys = [-1.0, 1.0], [-1.0, 1.0]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_lo == x_hi:
        pad = max(abs(x_lo), 1.0)
        x_lo, x_hi = x_lo - 0.5 * pad, x_hi + 0.5 * pad
    if y_lo == y_hi:
        pad = max(abs(y_lo), 1.0)
        y_lo, y_hi = y_lo - 0.5 * pad, y_hi + 0.5 * pad
    x_pad = 0.06 * (x_hi - x_lo)
    y_pad = 0.06 * (y_hi - y_lo)
    x_lo, x_hi = x_lo - x_pad, x_hi + x_pad
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad
    # always show the stability boundary
    x_lo = min(x_lo, 0.0)
    x_hi = max(x_hi, 0.0)

    def sx(v: float) -> float:
        return margin_l + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v: float) -> float:
        return margin_t + (y_hi - v) / (y_hi - y_lo) * plot_h

    parts: list[str] = []
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    )
    parts.append(f"<title>{escape(title)}</title>")
    parts.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    parts.append(
        f'<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#888" stroke-width="1"/>'
    )
    # imaginary axis (stability boundary)
    bx = sx(0.0)
    parts.append(
        f'<line x1="{bx:.1f}" y1="{margin_t}" x2="{bx:.1f}" y2="{margin_t + plot_h}" '
        f'stroke="#333" stroke-width="1" stroke-dasharray="5,4"/>'
    )
    for tv in _axis_ticks(x_lo, x_hi):
        x = sx(tv)
        parts.append(
            f'<line x1="{x:.1f}" y1="{margin_t + plot_h}" x2="{x:.1f}" '
            f'y2="{margin_t + plot_h + 6}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{margin_t + plot_h + 22}" font-size="12" '
            f'text-anchor="middle">{_fmt(tv)}</text>'
        )
    for tv in _axis_ticks(y_lo, y_hi):
        y = sy(tv)
        parts.append(
            f'<line x1="{margin_l - 6}" y1="{y:.1f}" x2="{margin_l}" y2="{y:.1f}" stroke="#333"/>'
        )
        parts.append(
            f'<text x="{margin_l - 10}" y="{y + 4:.1f}" font-size="12" '
            f'text-anchor="end">{_fmt(tv)}</text>'
        )
    parts.append(
        f'<text x="{margin_l + plot_w / 2:.1f}" y="{height - 18}" font-size="14" '
        f'text-anchor="middle">Real part (rad/s)</text>'
    )
    parts.append(
        f'<text x="24" y="{margin_t + plot_h / 2:.1f}" font-size="14" text-anchor="middle" '
        f'transform="rotate(-90 24 {margin_t + plot_h / 2:.1f})">Imaginary part / 2&#960; (GHz)</text>'
    )
    parts.append(
        f'<text x="{margin_l + plot_w / 2:.1f}" y="28" font-size="16" '
        f'text-anchor="middle">{escape(title)}</text>'
    )

    for z in zeros:
        x, y = sx(z.re_radps), sy(z.im_radps / _GHZ / (2.0 * math.pi))
        parts.append(
            f'<circle class="zero" cx="{x:.1f}" cy="{y:.1f}" r="4.5" fill="none" '
            f'stroke="{COLOR_ZERO}" stroke-width="1.5"/>'
        )
    r = 4.5
    for p in poles:
        x, y = sx(p.re_radps), sy(p.im_radps / _GHZ / (2.0 * math.pi))
        parts.append(
            f'<path class="{p.css_class}" stroke="{p.color}" stroke-width="1.8" fill="none" '
            f'd="M {x - r:.1f} {y - r:.1f} L {x + r:.1f} {y + r:.1f} '
            f'M {x - r:.1f} {y + r:.1f} L {x + r:.1f} {y - r:.1f}"/>'
        )

    lx = margin_l + plot_w + 18
    ly = margin_t + 10
    legend = [
        ("stable pole", COLOR_STABLE, "cross"),
        ("unstable pole", COLOR_UNSTABLE, "cross"),
        ("low-band real pole", COLOR_LOWBAND, "cross"),
        ("zero", COLOR_ZERO, "circle"),
    ]
    parts.append(f'<g class="legend" font-size="12">')
    for i, (label, color, shape) in enumerate(legend):
        y = ly + 22 * i
        if shape == "cross":
            parts.append(
                f'<path stroke="{color}" stroke-width="1.8" fill="none" '
                f'd="M {lx - 4} {y - 4} L {lx + 4} {y + 4} M {lx - 4} {y + 4} L {lx + 4} {y - 4}"/>'
            )
        else:
            parts.append(
                f'<circle cx="{lx}" cy="{y}" r="4" fill="none" stroke="{color}" stroke-width="1.5"/>'
            )
        parts.append(f'<text x="{lx + 12}" y="{y + 4}">{escape(label)}</text>')
    parts.append("</g>")
    parts.append("</svg>")
    return "\n".join(parts)
