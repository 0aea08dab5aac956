"""Minimal deterministic SVG line plots for run curves.

Hand-rolled on purpose: the only consumers are the command-line reports,
which need byte-stable output across reruns, so floats are formatted with
fixed precision and no timestamps or ids are embedded.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InputError

WIDTH = 640
HEIGHT = 420
MARGIN_LEFT = 64
MARGIN_RIGHT = 16
MARGIN_TOP = 34
MARGIN_BOTTOM = 46
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _fmt(v: float) -> str:
    return format(float(v), ".2f")


def _tick_label(v: float) -> str:
    return format(float(v), ".6g")


def _finite_range(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        raise InputError("no finite values to plot")
    return float(arr.min()), float(arr.max())


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if mag * mult >= raw:
            step = mag * mult
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out or [lo]


class LinePlot:
    """Collects series and optional shaded bands, renders one SVG string."""

    def __init__(self, title: str = "", x_label: str = "", y_label: str = "", log_y: bool = False):
        self.title = title
        self.x_label = x_label
        self.y_label = y_label
        self.log_y = log_y
        self._series: list[tuple[str, np.ndarray, np.ndarray, str]] = []
        self._bands: list[tuple[np.ndarray, np.ndarray, np.ndarray, str]] = []

    def _color(self) -> str:
        return PALETTE[len(self._series) % len(PALETTE)]

    def add_series(self, label: str, xs, ys, color: str | None = None):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.shape != ys.shape or xs.ndim != 1 or xs.size == 0:
            raise InputError("series must be equal-length 1-D arrays with at least one point")
        self._series.append((label, xs, ys, color or self._color()))

    def add_band(self, xs, lower, upper, color: str):
        xs = np.asarray(xs, dtype=float)
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if not (xs.shape == lower.shape == upper.shape) or xs.ndim != 1 or xs.size == 0:
            raise InputError("band must be equal-length 1-D arrays with at least one point")
        self._bands.append((xs, lower, upper, color))

    def _transform_y(self, ys: np.ndarray) -> np.ndarray:
        if not self.log_y:
            return ys
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(ys > 0.0, np.log10(ys), np.nan)

    def render(self) -> str:
        if not self._series:
            raise InputError("plot has no series")
        all_x = np.concatenate([xs for _, xs, _, _ in self._series] + [b[0] for b in self._bands])
        all_y = np.concatenate(
            [self._transform_y(ys) for _, _, ys, _ in self._series]
            + [self._transform_y(b[1]) for b in self._bands]
            + [self._transform_y(b[2]) for b in self._bands]
        )
        x_lo, x_hi = _finite_range(all_x)
        y_lo, y_hi = _finite_range(all_y)
        if x_hi == x_lo:
            x_hi = x_lo + 1.0
        if y_hi == y_lo:
            pad = max(abs(y_lo), 1.0) * 0.05
            y_lo, y_hi = y_lo - pad, y_hi + pad
        else:
            pad = (y_hi - y_lo) * 0.04
            y_lo, y_hi = y_lo - pad, y_hi + pad
        plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

        def px(x: float) -> float:
            return MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w

        def py(y: float) -> float:
            return MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
            f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" '
            'fill="none" stroke="#444444"/>',
        ]
        if self.title:
            parts.append(
                f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" font-size="14">{_escape(self.title)}</text>'
            )
        for t in _ticks(x_lo, x_hi):
            x = px(t)
            parts.append(
                f'<line x1="{_fmt(x)}" y1="{MARGIN_TOP + plot_h}" x2="{_fmt(x)}" '
                f'y2="{MARGIN_TOP + plot_h + 4}" stroke="#444444"/>'
            )
            parts.append(
                f'<text x="{_fmt(x)}" y="{MARGIN_TOP + plot_h + 18}" text-anchor="middle">{_tick_label(t)}</text>'
            )
        for t in _ticks(y_lo, y_hi):
            y = py(t)
            label = _tick_label(10.0**t) if self.log_y else _tick_label(t)
            parts.append(
                f'<line x1="{MARGIN_LEFT - 4}" y1="{_fmt(y)}" x2="{MARGIN_LEFT}" y2="{_fmt(y)}" stroke="#444444"/>'
            )
            parts.append(
                f'<text x="{MARGIN_LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end">{label}</text>'
            )
        if self.x_label:
            parts.append(
                f'<text x="{MARGIN_LEFT + plot_w // 2}" y="{HEIGHT - 10}" text-anchor="middle">'
                f"{_escape(self.x_label)}</text>"
            )
        if self.y_label:
            cx, cy = 16, MARGIN_TOP + plot_h // 2
            parts.append(
                f'<text x="{cx}" y="{cy}" text-anchor="middle" transform="rotate(-90 {cx} {cy})">'
                f"{_escape(self.y_label)}</text>"
            )
        for xs, lower, upper, color in self._bands:
            lo_t = self._transform_y(lower)
            hi_t = self._transform_y(upper)
            keep = np.isfinite(xs) & np.isfinite(lo_t) & np.isfinite(hi_t)
            if not keep.any():
                continue
            fwd = [f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs[keep], hi_t[keep])]
            back = [f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs[keep][::-1], lo_t[keep][::-1])]
            parts.append(
                f'<polygon points="{" ".join(fwd + back)}" fill="{color}" fill-opacity="0.15" stroke="none"/>'
            )
        for label, xs, ys, color in self._series:
            ys_t = self._transform_y(ys)
            keep = np.isfinite(xs) & np.isfinite(ys_t)
            if not keep.any():
                continue
            points = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs[keep], ys_t[keep]))
            parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        legend_y = MARGIN_TOP + 14
        for label, _, _, color in self._series:
            if not label:
                continue
            x0 = MARGIN_LEFT + plot_w - 150
            parts.append(
                f'<line x1="{x0}" y1="{legend_y - 4}" x2="{x0 + 18}" y2="{legend_y - 4}" '
                f'stroke="{color}" stroke-width="1.5"/>'
            )
            parts.append(f'<text x="{x0 + 24}" y="{legend_y}">{_escape(label)}</text>')
            legend_y += 16
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def line_plot(series, title: str = "", x_label: str = "", y_label: str = "", log_y: bool = False) -> str:
    """Render labeled (xs, ys) series into one SVG document string."""
    plot = LinePlot(title, x_label, y_label, log_y)
    for label, xs, ys in series:
        plot.add_series(label, xs, ys)
    return plot.render()
