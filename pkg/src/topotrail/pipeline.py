"""Trajectory -> diagram -> image glue shared by the CLI and the scripts."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .persistence import PersistenceDiagram, diagrams, lifetime_diagram
from .rips import distance_matrix, rips_filtration
from .trajectory import Trajectory, subsample
from .vectorize import DEFAULT_DELTA, DEFAULT_M, Window, flatten, persistence_image, shared_window


def trajectory_diagrams(tr: Trajectory, target: int = 60, strategy: str = "maxmin") -> dict[int, PersistenceDiagram]:
    """H0 and H1 diagrams of the (subsampled) trajectory's Rips filtration."""
    sub = subsample(tr, strategy, target)
    return diagrams(rips_filtration(distance_matrix(sub)))


def h1_diagrams(trajectories: Sequence[Trajectory], target: int = 60, strategy: str = "maxmin") -> list[PersistenceDiagram]:
    return [trajectory_diagrams(tr, target, strategy)[1] for tr in trajectories]


def image_matrix(
    pds: Sequence[PersistenceDiagram],
    m: int = DEFAULT_M,
    delta: float = DEFAULT_DELTA,
    window: Window | None = None,
) -> tuple[np.ndarray, Window | None]:
    """Flattened images, one row per diagram, on a window shared by all of them."""
    lts = [lifetime_diagram(pd) for pd in pds]
    if window is None:
        window = shared_window(lts, m, delta)
    rows = [flatten(persistence_image(lt, m, delta, window)) for lt in lts]
    return np.array(rows).reshape(len(pds), m * m), window
