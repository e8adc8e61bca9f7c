"""Optimal partial matchings, 1-Wasserstein distance and Frechet-mean barycenters
of persistence diagrams."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ValidationError
from .persistence import PersistenceDiagram

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    u_to_diagonal: tuple[int, ...]
    v_to_diagonal: tuple[int, ...]
    cost: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "pairs": [list(p) for p in self.pairs],
                "u_to_diagonal": list(self.u_to_diagonal),
                "v_to_diagonal": list(self.v_to_diagonal),
                "cost": self.cost,
            }
        )


def diagonal_cost(points: np.ndarray) -> np.ndarray:
    """Distance of each (birth, death) point to its orthogonal projection on the diagonal."""
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    return (points[:, 1] - points[:, 0]) / SQRT2


def diagonal_projection(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    mid = points.mean(axis=1)
    return np.stack([mid, mid], axis=1)


def _pts(d) -> np.ndarray:
    return d.points if isinstance(d, PersistenceDiagram) else np.asarray(d, dtype=float).reshape(-1, 2)


def matching_cost(u, v, matching: Matching) -> float:
    """Total transport cost of ``matching``; summed with fsum so the value does
    not depend on the order of the terms."""
    U, V = _pts(u), _pts(v)
    seen_u = sorted([i for i, _ in matching.pairs] + list(matching.u_to_diagonal))
    seen_v = sorted([j for _, j in matching.pairs] + list(matching.v_to_diagonal))
    if seen_u != list(range(len(U))) or seen_v != list(range(len(V))):
        raise ValidationError("matching must use every point of both diagrams exactly once")
    terms = [math.hypot(*(U[i] - V[j])) for i, j in matching.pairs]
    terms += diagonal_cost(U[list(matching.u_to_diagonal)]).tolist()
    terms += diagonal_cost(V[list(matching.v_to_diagonal)]).tolist()
    return math.fsum(terms)


def _check_finite(*pts):
    for p in pts:
        if not np.all(np.isfinite(p)):
            raise ValidationError("diagrams must be finite")


def optimal_partial_matching(u, v) -> Matching:
    """Minimum-cost matching where any point may instead go to the diagonal.

    Solved as a square assignment problem of size |U| + |V|: U's points plus
    one diagonal proxy per V point against V's points plus one diagonal
    proxy per U point.
    """
    U, V = _pts(u), _pts(v)
    _check_finite(U, V)
    nu, nv = len(U), len(V)
    if nu == 0 and nv == 0:
        return Matching((), (), (), 0.0)
    n = nu + nv
    cost = np.full((n, n), np.inf)
    if nu and nv:
        cost[:nu, :nv] = np.hypot(U[:, None, 0] - V[None, :, 0], U[:, None, 1] - V[None, :, 1])
    cost[np.arange(nu), nv + np.arange(nu)] = diagonal_cost(U)
    cost[nu + np.arange(nv), np.arange(nv)] = diagonal_cost(V)
    cost[nu:, nv:] = 0.0

    rows, cols = linear_sum_assignment(cost)
    pairs, u_diag, v_diag = [], [], []
    for r, c in zip(rows.tolist(), cols.tolist()):
        if r < nu and c < nv:
            pairs.append((r, c))
        elif r < nu:
            u_diag.append(r)
        elif c < nv:
            v_diag.append(c)
    m = Matching(tuple(pairs), tuple(u_diag), tuple(sorted(v_diag)), 0.0)
    return Matching(m.pairs, m.u_to_diagonal, m.v_to_diagonal, matching_cost(U, V, m))


def _same_dim(u, v):
    if isinstance(u, PersistenceDiagram) and isinstance(v, PersistenceDiagram) and u.dim != v.dim:
        raise ValidationError(f"homology dimensions differ: {u.dim} vs {v.dim}")


def wasserstein(u, v) -> float:
    _same_dim(u, v)
    return optimal_partial_matching(u, v).cost


def frechet_energy(mu, diagrams: Sequence) -> float:
    if len(diagrams) == 0:
        raise ValidationError("need at least one diagram")
    return math.fsum(wasserstein(mu, d) ** 2 for d in diagrams)


def wasserstein_series(diagrams: Sequence) -> list[float]:
    """Distances between consecutive diagrams."""
    if len(diagrams) < 2:
        raise ValidationError("need at least two diagrams")
    return [wasserstein(a, b) for a, b in zip(diagrams, diagrams[1:])]


def pairwise_distances(diagrams: Sequence) -> np.ndarray:
    n = len(diagrams)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = wasserstein(diagrams[i], diagrams[j])
    return out


@dataclass(frozen=True, eq=False)
class BarycenterResult:
    diagram: PersistenceDiagram
    energy: float
    iterations: int
    energy_trace: list[float] = field(default_factory=list)


def median_size_index(diagrams: Sequence) -> int:
    sizes = [len(_pts(d)) for d in diagrams]
    median = sorted(sizes)[(len(sizes) - 1) // 2]
    return sizes.index(median)


def _update(mu: np.ndarray, diagrams: Sequence[np.ndarray]) -> np.ndarray:
    """Move each barycenter point to the mean of its matched images."""
    acc = np.zeros_like(mu)
    for D in diagrams:
        m = optimal_partial_matching(mu, D)
        target = np.empty_like(mu)
        for i, j in m.pairs:
            target[i] = D[j]
        if m.u_to_diagonal:
            idx = list(m.u_to_diagonal)
            target[idx] = diagonal_projection(mu[idx])
        acc += target
    new = acc / len(diagrams)
    return new[new[:, 1] > new[:, 0]]


def barycenter(
    diagrams: Sequence,
    init_index: int | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> BarycenterResult:
    """Frechet-mean estimate by iterated matching and averaging.

    Starts from ``diagrams[init_index]`` (default: the diagram of median
    size). An update that would raise the energy is rejected and ends the
    loop, so ``energy_trace`` never increases. The result is a local
    minimizer.
    """
    if len(diagrams) == 0:
        raise ValidationError("need at least one diagram")
    if tol <= 0 or max_iter < 1:
        raise ValidationError("tol must be positive and max_iter >= 1")
    dim = diagrams[0].dim if isinstance(diagrams[0], PersistenceDiagram) else 1
    for d in diagrams:
        _same_dim(diagrams[0], d)
    pts = [_pts(d) for d in diagrams]
    _check_finite(*pts)
    if init_index is None:
        init_index = median_size_index(pts)
    if not 0 <= init_index < len(pts):
        raise ValidationError(f"init_index {init_index} out of range")

    mu = pts[init_index].copy()
    energy = frechet_energy(mu, pts)
    trace = [energy]
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        new = _update(mu, pts)
        new_energy = frechet_energy(new, pts)
        improvement = energy - new_energy
        if improvement < 0:
            break
        mu, energy = new, new_energy
        trace.append(energy)
        if improvement < tol * max(energy + improvement, 1e-300) or energy == 0.0:
            break
    return BarycenterResult(PersistenceDiagram(dim, mu), energy, iterations, trace)
