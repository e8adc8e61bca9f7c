"""Minimal deterministic SVG plots (no plotting library, byte-stable output)."""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .persistence import Barcode, PersistenceDiagram

W, H, PAD = 480, 360, 48
DIM_COLORS = {0: "black", 1: "red"}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


class _Axes:
    def __init__(self, xlim, ylim, title="", xlabel="", ylabel=""):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 <= self.y0:
            self.y1 = self.y0 + 1.0
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
            f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
            f'<rect x="{PAD}" y="{PAD // 2}" width="{W - 1.5 * PAD}" height="{H - 1.5 * PAD}" fill="none" stroke="#444"/>',
        ]
        if title:
            self.text(W / 2, PAD / 2 - 6, title, anchor="middle")
        self.text(W / 2, H - 8, xlabel, anchor="middle")
        self.parts.append(
            f'<text x="12" y="{H / 2}" font-size="11" font-family="sans-serif" text-anchor="middle" '
            f'transform="rotate(-90 12 {H / 2})">{ylabel}</text>'
        )
        for v in np.linspace(self.x0, self.x1, 5):
            self.text(self.px(v), H - PAD + 14, f"{v:.3g}", anchor="middle")
        for v in np.linspace(self.y0, self.y1, 5):
            self.text(PAD - 4, self.py(v) + 4, f"{v:.3g}", anchor="end")

    def px(self, x):
        return PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 1.5 * PAD)

    def py(self, y):
        return H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 1.5 * PAD)

    def text(self, x, y, s, anchor="start"):
        self.parts.append(
            f'<text x="{_fmt(x)}" y="{_fmt(y)}" font-size="11" font-family="sans-serif" text-anchor="{anchor}">{s}</text>'
        )

    def polyline(self, xs, ys, color="black", width=1.0):
        pts = " ".join(f"{_fmt(self.px(x))},{_fmt(self.py(y))}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def line(self, x0, y0, x1, y1, color="black", width=1.0, dash=False):
        extra = ' stroke-dasharray="4,3"' if dash else ""
        self.parts.append(
            f'<line x1="{_fmt(self.px(x0))}" y1="{_fmt(self.py(y0))}" x2="{_fmt(self.px(x1))}" '
            f'y2="{_fmt(self.py(y1))}" stroke="{color}" stroke-width="{width}"{extra}/>'
        )

    def points(self, xs, ys, color="black", r=3.0):
        for x, y in zip(xs, ys):
            self.parts.append(f'<circle cx="{_fmt(self.px(x))}" cy="{_fmt(self.py(y))}" r="{r}" fill="{color}"/>')

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _limits(values: Iterable[float], pad: float = 0.05) -> tuple[float, float]:
    v = np.asarray(list(values), dtype=float)
    v = v[np.isfinite(v)]
    if len(v) == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo or 1.0
    return lo - pad * span, hi + pad * span


def trajectory_svg(xy: np.ndarray, title: str = "") -> str:
    xy = np.asarray(xy)
    ax = _Axes(_limits(xy[:, 0]), _limits(xy[:, 1]), title, "x (m)", "y (m)")
    ax.polyline(xy[:, 0], xy[:, 1], color="#1f4e9c", width=0.8)
    return ax.render()


def diagram_svg(pds: Sequence[PersistenceDiagram], title: str = "") -> str:
    """Birth/death scatter; H0 in black, H1 in red, with the diagonal."""
    vals = [v for pd in pds for v in pd.points.ravel()] + [0.0]
    lo, hi = _limits(vals)
    ax = _Axes((lo, hi), (lo, hi), title, "birth", "death")
    ax.line(lo, lo, hi, hi, color="#888", dash=True)
    for pd in pds:
        ax.points(pd.births, pd.deaths, DIM_COLORS.get(pd.dim, "blue"))
    return ax.render()


def lifetime_svg(points: np.ndarray, title: str = "") -> str:
    points = np.asarray(points).reshape(-1, 2)
    ax = _Axes(_limits(np.append(points[:, 0], 0.0)), _limits(np.append(points[:, 1], 0.0)), title, "birth", "lifetime")
    ax.points(points[:, 0], points[:, 1], "red")
    return ax.render()


def barcode_svg(bc: Barcode, title: str = "") -> str:
    n = max(len(bc), 1)
    ax = _Axes(_limits([v for b in bc.bars for v in b[1:]] + [0.0]), (0, n + 1), title, "scale", "feature")
    for i, (dim, b, d) in enumerate(bc.bars):
        ax.line(b, n - i, d, n - i, color=DIM_COLORS.get(dim, "blue"), width=2.0)
    return ax.render()


def series_svg(xs: Sequence[float], ys: Sequence[float], marks: Sequence[float] = (), title: str = "") -> str:
    """Line plot with vertical red lines at ``marks``."""
    ax = _Axes(_limits(list(xs) + list(marks)), _limits(list(ys) + [0.0]), title, "day", "Wasserstein distance")
    ax.polyline(xs, ys, color="black")
    ax.points(xs, ys, "black", r=2.0)
    for m in marks:
        ax.line(m, ax.y0, m, ax.y1, color="red", width=1.5)
    return ax.render()
