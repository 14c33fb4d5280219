"""Deterministic static SVG charts: bar, grouped bar, pie and line."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape, quoteattr

from ..errors import UsageError

KINDS = ("bar", "grouped-bar", "pie", "line")
PALETTE = ("#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac")

MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 20, 40, 60


@dataclass(frozen=True)
class ChartSpec:
    """What to draw.

    ``data`` holds (label, value) pairs for bar and pie charts. ``series``
    holds (name, points) pairs: (x, y) points for line charts, one value per
    entry of ``categories`` for grouped bars.
    """

    kind: str
    title: str
    data: tuple[tuple[str, float], ...] = ()
    series: tuple[tuple[str, tuple], ...] = ()
    categories: tuple[str, ...] = ()
    x_label: str = ""
    y_label: str = ""
    width: int = 640
    height: int = 400
    output: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"unknown chart kind {self.kind!r}")
        object.__setattr__(self, "data", tuple((str(l), float(v)) for l, v in self.data))
        object.__setattr__(
            self, "series", tuple((str(n), tuple(_freeze(p) for p in pts)) for n, pts in self.series)
        )
        object.__setattr__(self, "categories", tuple(str(c) for c in self.categories))
        values = self._values()
        if not values:
            raise UsageError("chart needs at least one data point")
        if not all(math.isfinite(v) for v in values):
            raise UsageError("chart values must be finite")
        if self.kind in ("bar", "pie", "grouped-bar") and any(v < 0 for v in values):
            raise UsageError("bar and pie values must be non-negative")
        if self.kind == "grouped-bar" and any(len(p) != len(self.categories) for _, p in self.series):
            raise UsageError("grouped-bar series need one value per category")

    def _values(self) -> list[float]:
        if self.kind in ("bar", "pie"):
            return [v for _, v in self.data]
        if self.kind == "line":
            return [c for _, pts in self.series for pt in pts for c in pt]
        return [v for _, pts in self.series for v in pts]

    @classmethod
    def from_dict(cls, d: dict) -> "ChartSpec":
        return cls(
            kind=d["kind"],
            title=d.get("title", ""),
            data=tuple(tuple(p) for p in d.get("data", ())),
            series=tuple((s[0], tuple(s[1])) for s in d.get("series", ())),
            categories=tuple(d.get("categories", ())),
            x_label=d.get("x_label", ""),
            y_label=d.get("y_label", ""),
            width=int(d.get("width", 640)),
            height=int(d.get("height", 400)),
            output=d.get("output"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "ChartSpec":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _freeze(p):
    if isinstance(p, (list, tuple)):
        return tuple(float(c) for c in p)
    return float(p)


def fmt(v: float) -> str:
    """Fixed 3-decimal rendering with trailing zeros trimmed."""
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _nice_max(v: float) -> float:
    if v <= 0:
        return 1.0
    mag = 10 ** math.floor(math.log10(v))
    for step in (1, 2, 2.5, 5, 10):
        if step * mag >= v:
            return step * mag
    return 10 * mag


def _nice_step(span: float, n: int = 5) -> float:
    """Round tick step (1, 2, 2.5 or 5 times a power of ten) giving at most n steps."""
    raw = span / n
    mag = 10 ** math.floor(math.log10(raw))
    for step in (1, 2, 2.5, 5, 10):
        if step * mag >= raw:
            return step * mag
    return 10 * mag


def _ticks(lo: float, hi: float) -> list[float]:
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step - 1e-9)
    out = []
    k = first
    while k * step <= hi + 1e-9 * step:
        out.append(k * step)
        k += 1
    return out


class _Canvas:
    def __init__(self, spec: ChartSpec):
        self.spec = spec
        self.parts: list[str] = []
        self.x0 = MARGIN_LEFT
        self.x1 = spec.width - MARGIN_RIGHT
        self.y0 = spec.height - MARGIN_BOTTOM  # baseline
        self.y1 = MARGIN_TOP

    def add(self, s: str) -> None:
        self.parts.append(s)

    def text(self, x, y, s, anchor="middle", size=12, extra="") -> None:
        self.add(
            f'<text x="{fmt(x)}" y="{fmt(y)}" font-size="{size}" text-anchor="{anchor}"{extra}>{escape(s)}</text>'
        )

    def frame(self) -> None:
        s = self.spec
        self.text(s.width / 2, 24, s.title, size=16)
        if s.kind == "pie":
            return
        self.add(f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x1}" y2="{self.y0}" stroke="#333"/>')
        self.add(f'<line x1="{self.x0}" y1="{self.y0}" x2="{self.x0}" y2="{self.y1}" stroke="#333"/>')
        if s.x_label:
            self.text((self.x0 + self.x1) / 2, s.height - 12, s.x_label)
        if s.y_label:
            cy = (self.y0 + self.y1) / 2
            self.text(16, cy, s.y_label, extra=f' transform="rotate(-90 16 {fmt(cy)})"')

    def y_ticks(self, lo: float, hi: float) -> None:
        for v in _ticks(lo, hi):
            y = self.sy(v, lo, hi)
            self.add(f'<line x1="{self.x0 - 4}" y1="{fmt(y)}" x2="{self.x0}" y2="{fmt(y)}" stroke="#333"/>')
            self.text(self.x0 - 6, y + 4, fmt(v), anchor="end", size=10)

    def sy(self, v, lo, hi) -> float:
        return self.y0 - (v - lo) / (hi - lo) * (self.y0 - self.y1)

    def sx(self, v, lo, hi) -> float:
        return self.x0 + (v - lo) / (hi - lo) * (self.x1 - self.x0)

    def document(self) -> str:
        s = self.spec
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{s.width}" height="{s.height}" '
            f'viewBox="0 0 {s.width} {s.height}" font-family="sans-serif">\n'
            f'<rect width="{s.width}" height="{s.height}" fill="#fff"/>\n'
        )
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _bar(c: _Canvas) -> None:
    data = c.spec.data
    top = max(v for _, v in data)
    hi = top if top > 0 else 1.0
    c.y_ticks(0.0, hi)
    slot = (c.x1 - c.x0) / len(data)
    for i, (label, v) in enumerate(data):
        h = v / hi * (c.y0 - c.y1)
        x = c.x0 + slot * i + slot * 0.1
        c.add(
            f'<rect class="bar" x="{fmt(x)}" y="{fmt(c.y0 - h)}" width="{fmt(slot * 0.8)}" '
            f'height="{fmt(h)}" fill="{PALETTE[0]}" data-label={quoteattr(label)} data-value="{fmt(v)}"/>'
        )
        c.text(x + slot * 0.4, c.y0 + 14, label, size=10)


def _grouped_bar(c: _Canvas) -> None:
    s = c.spec
    top = max((v for _, pts in s.series for v in pts), default=0.0)
    hi = _nice_max(top)
    c.y_ticks(0.0, hi)
    slot = (c.x1 - c.x0) / len(s.categories)
    width = slot * 0.8 / max(len(s.series), 1)
    for j, cat in enumerate(s.categories):
        for k, (_, pts) in enumerate(s.series):
            h = pts[j] / hi * (c.y0 - c.y1)
            x = c.x0 + slot * j + slot * 0.1 + width * k
            c.add(
                f'<rect class="bar" x="{fmt(x)}" y="{fmt(c.y0 - h)}" width="{fmt(width)}" '
                f'height="{fmt(h)}" fill="{PALETTE[k % len(PALETTE)]}"/>'
            )
        c.text(c.x0 + slot * (j + 0.5), c.y0 + 14, cat, size=10)
    _legend(c, [n for n, _ in s.series])


def _legend(c: _Canvas, names: Sequence[str]) -> None:
    for k, name in enumerate(names):
        y = c.y1 + 14 * k
        color = PALETTE[k % len(PALETTE)]
        c.add(f'<rect x="{fmt(c.x1 - 120)}" y="{fmt(y)}" width="10" height="10" fill="{color}"/>')
        c.text(c.x1 - 106, y + 9, name, anchor="start", size=10)


def _pie(c: _Canvas) -> None:
    s = c.spec
    total = sum(v for _, v in s.data)
    if total <= 0:
        raise UsageError("pie chart values sum to zero")
    cx, cy = s.width / 2, (s.height + MARGIN_TOP) / 2
    r = min(s.width, s.height - MARGIN_TOP) / 2 - 30
    start = 0.0
    for i, (label, v) in enumerate(s.data):
        sweep = 360.0 * v / total
        color = PALETTE[i % len(PALETTE)]
        attrs = f'class="slice" fill="{color}" data-label={quoteattr(label)} data-angle="{fmt(sweep)}"'
        if sweep >= 360.0:
            c.add(f'<circle cx="{fmt(cx)}" cy="{fmt(cy)}" r="{fmt(r)}" {attrs}/>')
        elif sweep > 0:
            a0 = math.radians(start - 90.0)
            a1 = math.radians(start + sweep - 90.0)
            large = 1 if sweep > 180.0 else 0
            c.add(
                f'<path d="M {fmt(cx)} {fmt(cy)} L {fmt(cx + r * math.cos(a0))} {fmt(cy + r * math.sin(a0))} '
                f'A {fmt(r)} {fmt(r)} 0 {large} 1 {fmt(cx + r * math.cos(a1))} {fmt(cy + r * math.sin(a1))} Z" {attrs}/>'
            )
        mid = math.radians(start + sweep / 2 - 90.0)
        c.text(cx + (r + 16) * math.cos(mid), cy + (r + 16) * math.sin(mid) + 4, label, size=10)
        start += sweep


def _line(c: _Canvas) -> None:
    s = c.spec
    xs = [p[0] for _, pts in s.series for p in pts]
    ys = [p[1] for _, pts in s.series for p in pts]
    xlo, xhi = min(xs), max(xs)
    if xhi == xlo:
        xhi = xlo + 1.0
    ylo = min(0.0, min(ys))
    yhi = max(ys)
    yhi = yhi if yhi > ylo else ylo + 1.0
    c.y_ticks(ylo, yhi)
    for v in _ticks(xlo, xhi):
        c.text(c.sx(v, xlo, xhi), c.y0 + 14, fmt(v), size=10)
    for k, (_, pts) in enumerate(s.series):
        coords = " ".join(f"{fmt(c.sx(x, xlo, xhi))},{fmt(c.sy(y, ylo, yhi))}" for x, y in pts)
        c.add(
            f'<polyline class="series" points="{coords}" fill="none" '
            f'stroke="{PALETTE[k % len(PALETTE)]}" stroke-width="2"/>'
        )
    if len(s.series) > 1 or s.series[0][0]:
        _legend(c, [n for n, _ in s.series])


_DRAW = {"bar": _bar, "grouped-bar": _grouped_bar, "pie": _pie, "line": _line}


def render_chart(spec: ChartSpec) -> str:
    """Render ``spec`` to SVG text; identical specs give identical bytes."""
    c = _Canvas(spec)
    c.frame()
    _DRAW[spec.kind](c)
    return c.document()


def write_chart(spec: ChartSpec, path: str | Path | None = None) -> Path:
    target = Path(path or spec.output or "chart.svg")
    target.write_text(render_chart(spec), encoding="utf-8")
    return target
