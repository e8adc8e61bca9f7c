"""Persistence images: lifetime-weighted Gaussian densities integrated over a grid."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np
from scipy.special import ndtr

from .errors import ValidationError
from .persistence import LifetimeDiagram

DEFAULT_M = 20
DEFAULT_DELTA = 1e-3


class EmptyDiagram(ValidationError):
    """Raised by :func:`kernel` when the lifetime diagram has no points."""


@dataclass(frozen=True, eq=False)
class PersistenceKernel:
    centers: np.ndarray  # (p, 2) lifetime points
    weights: np.ndarray  # (p,)
    sigma: float

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class Window:
    """Axis-aligned rectangle: birth in [a, b], lifetime in [c, d]."""

    a: float
    b: float
    c: float
    d: float

    def union(self, other: "Window") -> "Window":
        return Window(min(self.a, other.a), max(self.b, other.b), min(self.c, other.c), max(self.d, other.d))

    def edges(self, m: int) -> tuple[np.ndarray, np.ndarray]:
        return np.linspace(self.a, self.b, m + 1), np.linspace(self.c, self.d, m + 1)


@dataclass(frozen=True, eq=False)
class PersistenceImage:
    m: int
    cells: np.ndarray  # rows: birth axis, columns: lifetime axis
    window: Window | None
    delta: float


def kernel(lt: LifetimeDiagram, m: int = DEFAULT_M) -> PersistenceKernel:
    if m < 1:
        raise ValidationError(f"resolution must be >= 1, got {m}")
    if len(lt) == 0:
        raise EmptyDiagram("empty-diagram")
    life = lt.lifetimes
    top = float(life.max())
    if not top > 0:
        raise ValidationError("lifetimes must be positive")
    return PersistenceKernel(np.array(lt.points, dtype=float), life / top, top / m)


def eval_density(k: PersistenceKernel, x, y):
    """Weighted sum of isotropic Gaussians with standard deviation ``k.sigma``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s2 = k.sigma**2
    dx = x[..., None] - k.centers[:, 0]
    dy = y[..., None] - k.centers[:, 1]
    g = np.exp(-(dx * dx + dy * dy) / (2 * s2)) / (2 * np.pi * s2)
    return g @ k.weights


def _axis_mass(edges: np.ndarray, centers: np.ndarray, sigma: float) -> np.ndarray:
    """(p, len(edges)-1) Gaussian mass of each center in each interval."""
    z = (edges[None, :] - centers[:, None]) / sigma
    lo, hi = z[:, :-1], z[:, 1:]
    # intervals right of the center use the upper tail, which keeps precision
    return np.where(lo >= 0, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))


def box_mass(k: PersistenceKernel, window: Window) -> float:
    """Exact integral of the density over ``window``."""
    px = _axis_mass(np.array([window.a, window.b]), k.centers[:, 0], k.sigma)[:, 0]
    qy = _axis_mass(np.array([window.c, window.d]), k.centers[:, 1], k.sigma)[:, 0]
    return float(np.sum(k.weights * px * qy))


def image_window(k: PersistenceKernel, delta: float = DEFAULT_DELTA, r0: float = 4.0, step: float = 0.5) -> Window:
    """Bounding box of the centers padded by r*sigma, r grown from ``r0`` until
    the captured mass reaches (1 - delta) of the total weight."""
    lo = k.centers.min(axis=0)
    hi = k.centers.max(axis=0)
    target = (1.0 - delta) * k.total_weight
    r = r0
    while True:
        pad = r * k.sigma
        w = Window(lo[0] - pad, hi[0] + pad, lo[1] - pad, hi[1] + pad)
        if box_mass(k, w) >= target:
            return w
        r += step


def cell_integrals(k: PersistenceKernel, window: Window, m: int) -> np.ndarray:
    bx, ly = window.edges(m)
    px = _axis_mass(bx, k.centers[:, 0], k.sigma)
    qy = _axis_mass(ly, k.centers[:, 1], k.sigma)
    return (px * k.weights[:, None]).T @ qy


def persistence_image(
    lt: LifetimeDiagram,
    m: int = DEFAULT_M,
    delta: float = DEFAULT_DELTA,
    window: Window | None = None,
) -> PersistenceImage:
    """M x M image of a lifetime diagram.

    Without ``window`` the image uses the diagram's own window; pass a shared
    window when images must be compared cell by cell. An empty diagram gives
    the all-zero image.
    """
    if m < 1:
        raise ValidationError(f"resolution must be >= 1, got {m}")
    if not 0 < delta < 1:
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    if len(lt) == 0:
        return PersistenceImage(m, np.zeros((m, m)), window, delta)
    k = kernel(lt, m)
    if window is None:
        window = image_window(k, delta)
    return PersistenceImage(m, cell_integrals(k, window, m), window, delta)


def shared_window(lts: Iterable[LifetimeDiagram], m: int = DEFAULT_M, delta: float = DEFAULT_DELTA) -> Window | None:
    """Union of the per-diagram windows; None when every diagram is empty."""
    out = None
    for lt in lts:
        if len(lt) == 0:
            continue
        w = image_window(kernel(lt, m), delta)
        out = w if out is None else out.union(w)
    return out


def flatten(image: PersistenceImage) -> np.ndarray:
    return np.asarray(image.cells).reshape(-1)


def write_csv(image: PersistenceImage, stream: TextIO) -> None:
    for row in image.cells:
        stream.write(",".join(repr(float(v)) for v in row) + "\n")


def write_pgm(image: PersistenceImage, stream: TextIO) -> None:
    """Plain (P2) grayscale, brightest cell = 255."""
    cells = np.asarray(image.cells)
    top = cells.max()
    scaled = np.zeros(cells.shape, dtype=int) if top <= 0 else np.rint(255 * cells / top).astype(int)
    rows, cols = scaled.shape
    stream.write(f"P2\n{cols} {rows}\n255\n")
    for row in scaled:
        stream.write(" ".join(str(v) for v in row) + "\n")
