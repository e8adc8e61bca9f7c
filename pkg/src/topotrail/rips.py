"""Vietoris-Rips filtrations up to dimension 2."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Simplex:
    vertices: tuple[int, ...]
    value: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1


@dataclass(frozen=True, eq=False)
class Filtration:
    """Simplices in filtration order, stored column-wise.

    ``vertices`` is (N, 3) with unused slots set to -1, ``dims`` and
    ``values`` are (N,). Order is (value, dim, lexicographic vertices).
    """

    vertices: np.ndarray
    dims: np.ndarray
    values: np.ndarray
    eps_max: float
    n_points: int

    def __len__(self):
        return len(self.values)

    @property
    def simplices(self) -> list[Simplex]:
        return [
            Simplex(tuple(int(v) for v in verts[: d + 1]), float(val))
            for verts, d, val in zip(self.vertices, self.dims, self.values)
        ]

    def count(self, dim: int) -> int:
        return int(np.sum(self.dims == dim))

    def facets(self) -> list[tuple[int, ...]]:
        """Filtration indices of each simplex's codimension-1 faces."""
        n = self.n_points
        vertex_pos = np.full(n, -1, dtype=np.int64)
        edge_pos = np.full((n, n), -1, dtype=np.int64)
        idx = np.arange(len(self))
        v = self.dims == 0
        vertex_pos[self.vertices[v, 0]] = idx[v]
        e = self.dims == 1
        edge_pos[self.vertices[e, 0], self.vertices[e, 1]] = idx[e]

        out: list[tuple[int, ...]] = [()] * len(self)
        for i in np.nonzero(e)[0]:
            a, b = self.vertices[i, :2]
            out[i] = (int(vertex_pos[a]), int(vertex_pos[b]))
        tri = np.nonzero(self.dims == 2)[0]
        if len(tri):
            a, b, c = self.vertices[tri].T
            f = np.stack([edge_pos[b, c], edge_pos[a, c], edge_pos[a, b]], axis=1)
            for i, row in zip(tri, f.tolist()):
                out[i] = tuple(row)
        return out

    def write_text(self, stream: TextIO) -> None:
        """Debug export: one ``value dim v0 [v1 [v2]]`` line per simplex."""
        for verts, d, val in zip(self.vertices, self.dims, self.values):
            stream.write(" ".join([repr(float(val)), str(int(d))] + [str(int(x)) for x in verts[: d + 1]]) + "\n")


def distance_matrix(points) -> np.ndarray:
    """Pairwise Euclidean distances; accepts a Trajectory or an (n, 2) array."""
    xy = np.asarray(getattr(points, "xy", points), dtype=float)
    if xy.ndim != 2 or len(xy) == 0:
        raise ValidationError("need a non-empty (n, d) point array")
    diff = xy[:, None, :] - xy[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=-1))
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def rips_filtration(dmat: np.ndarray, eps_max: float | None = None, max_dim: int = 2) -> Filtration:
    """All vertices, edges and (for ``max_dim=2``) triangles of diameter <= eps_max.

    ``eps_max`` defaults to the diameter of the point cloud.
    """
    d = np.asarray(dmat, dtype=float)
    n = len(d)
    if d.shape != (n, n):
        raise ValidationError("distance matrix must be square")
    if max_dim not in (1, 2):
        raise ValidationError(f"max_dim must be 1 or 2, got {max_dim}")
    if eps_max is None:
        eps_max = float(d.max()) if n > 1 else 1.0
        if eps_max <= 0:
            eps_max = 1.0
    if not eps_max > 0:
        raise ValidationError(f"eps_max must be positive, got {eps_max}")

    verts = [np.stack([np.arange(n), np.full(n, -1), np.full(n, -1)], axis=1)]
    vals = [np.zeros(n)]
    dims = [np.zeros(n, dtype=np.int8)]

    iu, ju = np.triu_indices(n, k=1)
    ev = d[iu, ju]
    keep = ev <= eps_max
    iu, ju, ev = iu[keep], ju[keep], ev[keep]
    verts.append(np.stack([iu, ju, np.full(len(iu), -1)], axis=1))
    vals.append(ev)
    dims.append(np.ones(len(iu), dtype=np.int8))

    if max_dim == 2 and n >= 3:
        for i in range(n - 2):
            sub = d[i + 1 :, i + 1 :]
            jj, kk = np.triu_indices(n - i - 1, k=1)
            tv = np.maximum(np.maximum(d[i, jj + i + 1], d[i, kk + i + 1]), sub[jj, kk])
            ok = tv <= eps_max
            if not np.any(ok):
                continue
            cnt = int(ok.sum())
            verts.append(np.stack([np.full(cnt, i), jj[ok] + i + 1, kk[ok] + i + 1], axis=1))
            vals.append(tv[ok])
            dims.append(np.full(cnt, 2, dtype=np.int8))

    V = np.concatenate(verts).astype(np.int64)
    values = np.concatenate(vals)
    D = np.concatenate(dims)
    order = np.lexsort((V[:, 2], V[:, 1], V[:, 0], D, values))
    return Filtration(V[order], D[order], values[order], float(eps_max), n)
