"""Static SVG line and band charts.

Output is plain SVG 1.1 text with fixed-precision coordinates and no
timestamps, so identical inputs produce byte-identical documents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


class EmptyDataError(ValueError):
    """Chart requested with no series, bands, or points."""


@dataclass(frozen=True)
class Series:
    label: str
    xs: Sequence[float]
    ys: Sequence[float]
    color: Optional[str] = None
    dash: Optional[str] = None  # e.g. "4 3"
    width: float = 1.5


@dataclass(frozen=True)
class Band:
    """Filled min/max region, e.g. a per-m metric range."""

    label: str
    xs: Sequence[float]
    lo: Sequence[float]
    hi: Sequence[float]
    color: Optional[str] = None
    opacity: float = 0.35


@dataclass(frozen=True)
class GuideLine:
    """Dashed horizontal reference line (capacity, equilibrium level, ...)."""

    y: float
    label: str = ""
    color: str = "#555555"


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _nice_ticks(lo: float, hi: float, target: int = 6) -> List[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 10000 or abs(v) < 0.01:
        return f"{v:.3g}"
    return f"{v:g}"


@dataclass
class _Layout:
    width: int
    height: int
    margin_left: int = 62
    margin_right: int = 14
    margin_top: int = 30
    margin_bottom: int = 42
    x_range: Tuple[float, float] = (0.0, 1.0)
    y_range: Tuple[float, float] = (0.0, 1.0)

    def x(self, v: float) -> float:
        lo, hi = self.x_range
        span = hi - lo if hi > lo else 1.0
        return self.margin_left + (v - lo) / span * (self.width - self.margin_left - self.margin_right)

    def y(self, v: float) -> float:
        lo, hi = self.y_range
        span = hi - lo if hi > lo else 1.0
        return self.height - self.margin_bottom - (v - lo) / span * (
            self.height - self.margin_top - self.margin_bottom
        )


def render_chart(
    series: Sequence[Series] = (),
    bands: Sequence[Band] = (),
    guides: Sequence[GuideLine] = (),
    *,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    width: int = 640,
    height: int = 420,
    y_min: Optional[float] = None,
    y_max: Optional[float] = None,
) -> str:
    """Render series, bands, and guide lines into one self-contained SVG."""
    xs_all: List[float] = []
    ys_all: List[float] = []
    for s in series:
        finite = [(x, y) for x, y in zip(s.xs, s.ys) if math.isfinite(y)]
        xs_all.extend(x for x, _ in finite)
        ys_all.extend(y for _, y in finite)
    for b in bands:
        for x, lo, hi in zip(b.xs, b.lo, b.hi):
            if math.isfinite(lo) and math.isfinite(hi):
                xs_all.append(x)
                ys_all.extend((lo, hi))
    if not xs_all:
        raise EmptyDataError("no plottable points")
    ys_all.extend(g.y for g in guides)
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo = min(ys_all) if y_min is None else y_min
    y_hi = max(ys_all) if y_max is None else y_max
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    if y_min is None:
        y_lo -= pad
    if y_max is None:
        y_hi += pad
    lay = _Layout(width=width, height=height, x_range=(x_lo, x_hi), y_range=(y_lo, y_hi))

    out: List[str] = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">'
    )
    out.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    if title:
        out.append(
            f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{_esc(title)}</text>'
        )

    # axes and ticks
    ax_left, ax_right = lay.margin_left, width - lay.margin_right
    ax_top, ax_bottom = lay.margin_top, height - lay.margin_bottom
    out.append(
        f'<g stroke="#888888" stroke-width="1">'
        f'<line x1="{ax_left}" y1="{ax_bottom}" x2="{ax_right}" y2="{ax_bottom}"/>'
        f'<line x1="{ax_left}" y1="{ax_top}" x2="{ax_left}" y2="{ax_bottom}"/></g>'
    )
    tick_txt: List[str] = []
    for tx in _nice_ticks(x_lo, x_hi):
        px = lay.x(tx)
        out.append(
            f'<line x1="{_fmt(px)}" y1="{ax_bottom}" x2="{_fmt(px)}" y2="{ax_bottom + 4}" '
            f'stroke="#888888"/>'
        )
        tick_txt.append(
            f'<text x="{_fmt(px)}" y="{ax_bottom + 16}" text-anchor="middle">{_tick_label(tx)}</text>'
        )
    for ty in _nice_ticks(y_lo, y_hi):
        py = lay.y(ty)
        out.append(
            f'<line x1="{ax_left - 4}" y1="{_fmt(py)}" x2="{ax_left}" y2="{_fmt(py)}" '
            f'stroke="#888888"/>'
        )
        tick_txt.append(
            f'<text x="{ax_left - 7}" y="{_fmt(py + 3)}" text-anchor="end">{_tick_label(ty)}</text>'
        )
    out.append(f'<g font-family="sans-serif" font-size="10" fill="#333333">{"".join(tick_txt)}</g>')
    if x_label:
        out.append(
            f'<text x="{(ax_left + ax_right) / 2:.0f}" y="{height - 8}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_esc(x_label)}</text>'
        )
    if y_label:
        cy = (ax_top + ax_bottom) / 2
        out.append(
            f'<text x="14" y="{cy:.0f}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="11" transform="rotate(-90 14 {cy:.0f})">{_esc(y_label)}</text>'
        )

    clip = f'<clipPath id="plot"><rect x="{ax_left}" y="{ax_top}" width="{ax_right - ax_left}" height="{ax_bottom - ax_top}"/></clipPath>'
    out.append(f"<defs>{clip}</defs>")
    out.append('<g clip-path="url(#plot)">')

    color_index = 0
    legend: List[Tuple[str, str, Optional[str]]] = []
    for b in bands:
        color = b.color or PALETTE[color_index % len(PALETTE)]
        color_index += 1
        pts = [
            (x, lo, hi)
            for x, lo, hi in zip(b.xs, b.lo, b.hi)
            if math.isfinite(lo) and math.isfinite(hi)
        ]
        if not pts:
            continue
        forward = " ".join(f"{_fmt(lay.x(x))},{_fmt(lay.y(hi))}" for x, _, hi in pts)
        backward = " ".join(f"{_fmt(lay.x(x))},{_fmt(lay.y(lo))}" for x, lo, _ in reversed(pts))
        out.append(
            f'<polygon points="{forward} {backward}" fill="{color}" '
            f'fill-opacity="{b.opacity:g}" stroke="{color}" stroke-width="0.8"/>'
        )
        if b.label:
            legend.append((b.label, color, None))
    for s in series:
        color = s.color or PALETTE[color_index % len(PALETTE)]
        color_index += 1
        segments = _finite_segments(s.xs, s.ys)
        dash = f' stroke-dasharray="{s.dash}"' if s.dash else ""
        for seg in segments:
            pts = " ".join(f"{_fmt(lay.x(x))},{_fmt(lay.y(y))}" for x, y in seg)
            out.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" '
                f'stroke-width="{s.width:g}"{dash}/>'
            )
        if s.label:
            legend.append((s.label, color, s.dash))
    for g in guides:
        py = lay.y(g.y)
        out.append(
            f'<line x1="{ax_left}" y1="{_fmt(py)}" x2="{ax_right}" y2="{_fmt(py)}" '
            f'stroke="{g.color}" stroke-width="1" stroke-dasharray="5 4"/>'
        )
        if g.label:
            out.append(
                f'<text x="{ax_right - 4}" y="{_fmt(py - 3)}" text-anchor="end" '
                f'font-family="sans-serif" font-size="9" fill="{g.color}">{_esc(g.label)}</text>'
            )
    out.append("</g>")

    # legend
    if legend:
        lx, ly = ax_left + 8, ax_top + 6
        rows = []
        for i, (label, color, dash) in enumerate(legend):
            yy = ly + 13 * i
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            rows.append(
                f'<line x1="{lx}" y1="{yy}" x2="{lx + 18}" y2="{yy}" stroke="{color}" '
                f'stroke-width="2"{dash_attr}/>'
                f'<text x="{lx + 23}" y="{yy + 3}" font-family="sans-serif" '
                f'font-size="10" fill="#333333">{_esc(label)}</text>'
            )
        out.append("".join(rows))

    out.append("</svg>")
    return "\n".join(out) + "\n"


def _finite_segments(xs: Sequence[float], ys: Sequence[float]) -> List[List[Tuple[float, float]]]:
    segments: List[List[Tuple[float, float]]] = []
    current: List[Tuple[float, float]] = []
    for x, y in zip(xs, ys):
        if math.isfinite(x) and math.isfinite(y):
            current.append((x, y))
        elif current:
            segments.append(current)
            current = []
    if current:
        segments.append(current)
    return [seg for seg in segments if seg]


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
