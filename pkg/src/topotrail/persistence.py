"""Persistent homology (H0, H1) by column reduction over GF(2)."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .rips import Filtration

ESSENTIAL = math.inf


@dataclass(frozen=True)
class PersistencePair:
    dim: int
    birth: float
    death: float  # math.inf for an essential class

    @property
    def essential(self) -> bool:
        return math.isinf(self.death)


@dataclass(frozen=True)
class Pairing:
    """Result of a boundary reduction, in filtration indices."""

    pairs: tuple[tuple[int, int], ...]
    essential: tuple[int, ...]


def reduce_columns(facets: Sequence[Sequence[int]]) -> Pairing:
    """Standard left-to-right column reduction of a GF(2) boundary matrix.

    ``facets[j]`` lists the row indices of column j. Returns (low, j) pairs
    and the indices that are neither a pivot row nor a nonzero column.
    """
    n = len(facets)
    pivot_of: dict[int, int] = {}
    reduced: dict[int, set[int]] = {}
    pairs = []
    for j in range(n):
        col = set(facets[j])
        if col and max(col) >= j:
            raise ValidationError(f"simplex {j} has a face that does not precede it")
        while col:
            low = max(col)
            k = pivot_of.get(low)
            if k is None:
                pivot_of[low] = j
                reduced[j] = col
                pairs.append((low, j))
                break
            col ^= reduced[k]
    paired = set(pivot_of) | set(reduced)
    essential = tuple(j for j in range(n) if j not in paired)
    return Pairing(tuple(pairs), essential)


def reduce_boundary(filtration: Filtration, early_exit: bool = True) -> Pairing:
    """Persistence pairing of a filtration.

    With ``early_exit`` the reduction stops once every simplex below the top
    dimension has been processed and no class of dimension top-1 remains
    open. Every later top-dimensional column would reduce to zero, so they
    are reported as unpaired without being reduced; the pairing is the same
    as the full reduction.
    """
    facets = filtration.facets()
    dims = filtration.dims
    n = len(facets)
    if n == 0:
        return Pairing((), ())
    top = int(dims.max())
    below_top_left = int(np.sum(dims < top))

    pivot_of: dict[int, int] = {}
    reduced: dict[int, set[int]] = {}
    open_below: set[int] = set()  # zero columns of dim top-1 not yet killed
    pairs = []
    for j in range(n):
        dj = dims[j]
        col = set(facets[j])
        if col and max(col) >= j:
            raise ValidationError(f"simplex {j} has a face that does not precede it")
        while col:
            low = max(col)
            k = pivot_of.get(low)
            if k is None:
                pivot_of[low] = j
                reduced[j] = col
                pairs.append((low, j))
                open_below.discard(low)
                break
            col ^= reduced[k]
        if dj < top:
            below_top_left -= 1
            if not col and dj == top - 1:
                open_below.add(j)
        if early_exit and top > 0 and below_top_left == 0 and not open_below:
            break

    paired = set(pivot_of) | set(reduced)
    essential = tuple(j for j in range(n) if j not in paired)
    return Pairing(tuple(pairs), essential)


@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    """Multiset of (birth, death) points of one homology dimension."""

    dim: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def pairs(self) -> list[PersistencePair]:
        return [PersistencePair(self.dim, float(b), float(d)) for b, d in self.points]

    @property
    def births(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def deaths(self) -> np.ndarray:
        return self.points[:, 1]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.points)))

    def canonical(self) -> "PersistenceDiagram":
        order = np.lexsort((self.points[:, 1], self.points[:, 0]))
        return PersistenceDiagram(self.dim, self.points[order])

    def to_records(self) -> list[dict]:
        return [
            {"dim": self.dim, "birth": float(b), "death": None if math.isinf(d) else float(d)}
            for b, d in self.points
        ]

    @classmethod
    def empty(cls, dim: int) -> "PersistenceDiagram":
        return cls(dim, np.empty((0, 2)))


def diagrams_to_json(diagrams: Sequence[PersistenceDiagram]) -> str:
    """JSON array of {dim, birth, death}; essential deaths are ``null``."""
    records = [r for pd in diagrams for r in pd.to_records()]
    return json.dumps(records, indent=1)


def diagrams_from_json(text: str) -> dict[int, PersistenceDiagram]:
    by_dim: dict[int, list] = {}
    for r in json.loads(text):
        death = math.inf if r["death"] is None else float(r["death"])
        by_dim.setdefault(int(r["dim"]), []).append((float(r["birth"]), death))
    return {k: PersistenceDiagram(k, np.array(v)) for k, v in sorted(by_dim.items())}


def persistence_pairs(filtration: Filtration, pairing: Pairing | None = None) -> list[PersistencePair]:
    """All raw pairs (zero-lifetime included), essential deaths as inf."""
    if pairing is None:
        pairing = reduce_boundary(filtration)
    vals, dims = filtration.values, filtration.dims
    out = [PersistencePair(int(dims[b]), float(vals[b]), float(vals[d])) for b, d in pairing.pairs]
    out += [PersistencePair(int(dims[j]), float(vals[j]), ESSENTIAL) for j in pairing.essential]
    return out


_DEFAULT_POLICY = {0: "cap_at_eps_max", 1: "drop"}


def persistence_diagram(
    filtration: Filtration,
    k: int,
    essential_policy: str | None = None,
    pairing: Pairing | None = None,
    drop_zero: bool = True,
) -> PersistenceDiagram:
    """Diagram of dimension ``k`` in {0, 1}.

    Essential classes are capped at ``eps_max`` or dropped; by default H0's
    is capped and H1's dropped.
    """
    if k not in (0, 1):
        raise ValidationError(f"homology dimension must be 0 or 1, got {k}")
    policy = essential_policy or _DEFAULT_POLICY[k]
    if policy not in ("cap_at_eps_max", "drop"):
        raise ValidationError(f"unknown essential policy {policy!r}")
    pts = []
    for p in persistence_pairs(filtration, pairing):
        if p.dim != k:
            continue
        death = p.death
        if p.essential:
            if policy == "drop":
                continue
            death = filtration.eps_max
        if drop_zero and not death > p.birth:
            continue
        pts.append((p.birth, death))
    return PersistenceDiagram(k, np.array(pts, dtype=float).reshape(-1, 2))


def diagrams(filtration: Filtration) -> dict[int, PersistenceDiagram]:
    """H0 and H1 diagrams from a single reduction, default policies."""
    pairing = reduce_boundary(filtration)
    return {k: persistence_diagram(filtration, k, pairing=pairing) for k in (0, 1)}


@dataclass(frozen=True, eq=False)
class LifetimeDiagram:
    """Points (birth, death - birth), ascending in lifetime."""

    points: np.ndarray

    def __len__(self):
        return len(self.points)

    @property
    def births(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def lifetimes(self) -> np.ndarray:
        return self.points[:, 1]


def lifetime_diagram(pd: PersistenceDiagram) -> LifetimeDiagram:
    if not pd.is_finite():
        raise ValidationError("diagram has essential (infinite) points; apply an essential policy first")
    b = pd.points[:, 0]
    life = pd.points[:, 1] - b
    order = np.lexsort((b, life))
    pts = np.stack([b[order], life[order]], axis=1).reshape(-1, 2)
    pts.flags.writeable = False
    return LifetimeDiagram(pts)


@dataclass(frozen=True)
class Barcode:
    bars: tuple[tuple[int, float, float], ...]

    def __len__(self):
        return len(self.bars)


def barcode(*pds: PersistenceDiagram) -> Barcode:
    bars = [(pd.dim, float(b), float(d)) for pd in pds for b, d in pd.points]
    return Barcode(tuple(sorted(bars)))
