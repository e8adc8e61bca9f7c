"""Trajectory datasets: CSV ingestion, maintenance periods, subsampling and a
synthetic bounded random-walk generator."""
from __future__ import annotations

import bisect
import csv
import io
import math
from dataclasses import dataclass, field, replace
from itertools import groupby
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import ParseError, ValidationError

CSV_HEADER = ["day", "patch", "t", "x", "y"]


@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    x: float
    y: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered 2-D samples of one robot on one day in one patch.

    ``t`` has shape (n,) and ``xy`` shape (n, 2), coordinates in meters.
    """

    t: np.ndarray
    xy: np.ndarray
    day: int
    patch_id: int
    period_id: int | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        if len(t) == 0:
            raise ValidationError("trajectory has no points")
        if len(t) != len(xy):
            raise ValidationError("t and xy lengths differ")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(xy))):
            raise ValidationError("non-finite coordinate")
        if np.any(np.diff(t) < 0):
            raise ValidationError(f"timestamps decrease (day {self.day}, patch {self.patch_id})")
        t.flags.writeable = False
        xy.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "xy", xy)

    def __len__(self):
        return len(self.t)

    @property
    def points(self) -> list[TrajectoryPoint]:
        return [TrajectoryPoint(float(t), float(x), float(y)) for t, (x, y) in zip(self.t, self.xy)]

    @property
    def key(self) -> tuple[int, int]:
        return (self.day, self.patch_id)

    def same_as(self, other: "Trajectory") -> bool:
        return (
            self.key == other.key
            and self.period_id == other.period_id
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.xy, other.xy)
        )


@dataclass(frozen=True)
class Dataset:
    trajectories: tuple[Trajectory, ...]
    maintenance_dates: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        object.__setattr__(self, "maintenance_dates", tuple(self.maintenance_dates))

    def __len__(self):
        return len(self.trajectories)

    def get(self, day: int, patch_id: int) -> Trajectory:
        for tr in self.trajectories:
            if tr.key == (day, patch_id):
                return tr
        keys = ", ".join(f"({d},{p})" for d, p in self.keys())
        raise LookupError(f"no trajectory for day {day}, patch {patch_id}; available: {keys}")

    def keys(self) -> list[tuple[int, int]]:
        return [tr.key for tr in self.trajectories]

    def patches(self) -> list[int]:
        return sorted({tr.patch_id for tr in self.trajectories})

    def for_patch(self, patch_id: int) -> list[Trajectory]:
        return sorted((tr for tr in self.trajectories if tr.patch_id == patch_id), key=lambda tr: tr.day)


# -- CSV interchange -------------------------------------------------------------------


def _parse_float(text: str, line: int, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(line, f"field {name!r} is not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(line, f"field {name!r} is not finite: {text!r}")
    return value


def _parse_int(text: str, line: int, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ParseError(line, f"field {name!r} is not an integer: {text!r}") from None


def parse_maintenance(stream: TextIO) -> list[int]:
    """Read a maintenance sidecar: one day identifier per line, blank lines ignored."""
    dates = []
    for lineno, raw in enumerate(stream, start=1):
        text = raw.strip()
        if text:
            dates.append(_parse_int(text, lineno, "day"))
    return dates


def parse_trajectory_csv(stream: TextIO, maintenance: TextIO | Sequence[int] | None = None) -> Dataset:
    """Parse ``day,patch,t,x,y`` records into one trajectory per (day, patch).

    Groups may interleave in the file, but each group's rows must appear in
    non-decreasing ``t``. Period ids are assigned when maintenance dates
    (a sidecar stream or a list) are given.
    """
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise ValidationError("empty input")
    if [h.strip() for h in header] != CSV_HEADER:
        raise ParseError(1, f"expected header {','.join(CSV_HEADER)!r}, got {','.join(header)!r}")

    groups: dict[tuple[int, int], list[tuple[float, float, float, int]]] = {}
    for row in reader:
        lineno = reader.line_num
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 5:
            raise ParseError(lineno, f"expected 5 fields, got {len(row)}")
        day = _parse_int(row[0].strip(), lineno, "day")
        patch = _parse_int(row[1].strip(), lineno, "patch")
        t = _parse_float(row[2], lineno, "t")
        x = _parse_float(row[3], lineno, "x")
        y = _parse_float(row[4], lineno, "y")
        rows = groups.setdefault((day, patch), [])
        if rows and t < rows[-1][0]:
            raise ValidationError(f"line {lineno}: timestamp {t} decreases within day {day}, patch {patch}")
        rows.append((t, x, y, lineno))
    if not groups:
        raise ValidationError("input has no records")

    trajectories = []
    for (day, patch) in sorted(groups):
        rows = groups[(day, patch)]
        arr = np.array([r[:3] for r in rows], dtype=float)
        trajectories.append(Trajectory(arr[:, 0], arr[:, 1:], day=day, patch_id=patch))
    dataset = Dataset(tuple(trajectories))

    if maintenance is not None:
        dates = parse_maintenance(maintenance) if hasattr(maintenance, "read") else list(maintenance)
        if dates:
            dataset = segment_periods(replace(dataset, maintenance_dates=tuple(dates)))
        else:
            dataset = replace(dataset, maintenance_dates=())
    return dataset


def write_dataset_csv(dataset: Dataset, stream: TextIO) -> None:
    """Serialize in the same dialect ``parse_trajectory_csv`` reads (LF endings)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for tr in sorted(dataset.trajectories, key=lambda tr: tr.key):
        for t, (x, y) in zip(tr.t, tr.xy):
            writer.writerow([tr.day, tr.patch_id, repr(float(t)), repr(float(x)), repr(float(y))])


def write_maintenance(dates: Iterable[int], stream: TextIO) -> None:
    for d in dates:
        stream.write(f"{d}\n")


def dataset_to_csv_text(dataset: Dataset) -> str:
    buf = io.StringIO()
    write_dataset_csv(dataset, buf)
    return buf.getvalue()


# -- periods and subsampling -----------------------------------------------------------


def period_of(day: int, maintenance_dates: Sequence[int]) -> int:
    # a trajectory recorded on a maintenance day belongs to the period after it
    return bisect.bisect_right(maintenance_dates, day)


def segment_periods(dataset: Dataset) -> Dataset:
    dates = list(dataset.maintenance_dates)
    if not dates:
        raise ValidationError("no maintenance dates")
    if any(b < a for a, b in zip(dates, dates[1:])):
        raise ValidationError(f"maintenance dates are not sorted: {dates}")
    trajectories = tuple(replace(tr, period_id=period_of(tr.day, dates)) for tr in dataset.trajectories)
    return replace(dataset, trajectories=trajectories)


def subsample_indices(xy: np.ndarray, strategy: str, target_size: int) -> np.ndarray:
    n = len(xy)
    if target_size < 2:
        raise ValidationError(f"target_size must be >= 2, got {target_size}")
    if n <= target_size:
        return np.arange(n)
    if strategy == "stride":
        k = math.ceil(n / target_size)
        idx = list(range(0, n, k))
        if idx[-1] != n - 1:
            if len(idx) < target_size:
                idx.append(n - 1)
            else:
                idx[-1] = n - 1
        return np.array(idx)
    if strategy == "maxmin":
        chosen = [0]
        mind = np.hypot(*(xy - xy[0]).T)
        mind[0] = -np.inf
        for _ in range(target_size - 1):
            nxt = int(np.argmax(mind))
            chosen.append(nxt)
            mind = np.minimum(mind, np.hypot(*(xy - xy[nxt]).T))
            mind[nxt] = -np.inf
        return np.sort(np.array(chosen))
    raise ValidationError(f"unknown subsample strategy {strategy!r}")


def subsample(trajectory: Trajectory, strategy: str = "maxmin", target_size: int = 400) -> Trajectory:
    """Reduce a trajectory to at most ``target_size`` points, keeping time order.

    ``stride`` keeps every k-th point with the last point forced in;
    ``maxmin`` picks farthest-point landmarks starting from the first point.
    """
    idx = subsample_indices(trajectory.xy, strategy, target_size)
    if len(idx) == len(trajectory):
        return trajectory
    return replace(trajectory, t=trajectory.t[idx], xy=trajectory.xy[idx])


# -- synthetic generator ---------------------------------------------------------------


def _validate_polygon(poly) -> np.ndarray:
    p = np.asarray(poly, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or len(p) < 3:
        raise ValidationError("polygon needs at least 3 (x, y) vertices")
    if not np.all(np.isfinite(p)):
        raise ValidationError("polygon has non-finite vertices")
    x, y = p[:, 0], p[:, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if abs(area) < 1e-9:
        raise ValidationError("degenerate polygon (zero area)")
    if area < 0:
        p = p[::-1].copy()
    e = np.roll(p, -1, axis=0) - p
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    if np.any(cross < -1e-12):
        raise ValidationError("polygon is not convex")
    return p


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the synthetic daily random walks.

    Day ``d`` (1-based) falls in regime ``(d-1) // days_per_regime`` and in
    patch ``(d-1) % len(patches)``; a maintenance date sits on the first day
    of every regime after the first.
    """

    patches: tuple = (((0.0, 0.0), (60.0, 0.0), (60.0, 60.0), (0.0, 60.0)),)
    days_per_regime: int = 5
    steps_per_day: int = 400
    step_length_mean: tuple[float, ...] = (0.5, 4.0)
    turning_concentration: tuple[float, ...] = (8.0, 8.0)
    seed: int = 0
    dt: float = 1.0
    turning_bias: float = 0.0
    _polygons: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.patches:
            raise ValidationError("at least one patch polygon is required")
        polys = tuple(_validate_polygon(p) for p in self.patches)
        object.__setattr__(self, "_polygons", polys)
        object.__setattr__(self, "step_length_mean", tuple(float(v) for v in self.step_length_mean))
        object.__setattr__(self, "turning_concentration", tuple(float(v) for v in self.turning_concentration))
        if self.days_per_regime < 1 or self.steps_per_day < 1:
            raise ValidationError("days_per_regime and steps_per_day must be positive")
        if len(self.step_length_mean) != len(self.turning_concentration) or not self.step_length_mean:
            raise ValidationError("regime parameter lists must be non-empty and of equal length")
        if any(v <= 0 for v in self.step_length_mean) or any(k < 0 for k in self.turning_concentration):
            raise ValidationError("step lengths must be positive and concentrations non-negative")
        if self.dt <= 0:
            raise ValidationError("dt must be positive")

    @property
    def n_regimes(self) -> int:
        return len(self.step_length_mean)

    @property
    def n_days(self) -> int:
        return self.n_regimes * self.days_per_regime

    @property
    def maintenance_dates(self) -> tuple[int, ...]:
        return tuple(r * self.days_per_regime + 1 for r in range(1, self.n_regimes))


def inside_polygon(poly: np.ndarray, pts: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Vectorized containment test for a counter-clockwise convex polygon."""
    pts = np.atleast_2d(pts)
    a = poly
    e = np.roll(poly, -1, axis=0) - poly
    rel = pts[:, None, :] - a[None, :, :]
    cross = e[None, :, 0] * rel[:, :, 1] - e[None, :, 1] * rel[:, :, 0]
    scale = np.hypot(e[:, 0], e[:, 1])[None, :]
    return np.all(cross / scale >= -tol, axis=1)


def _reflect_into(poly: np.ndarray, normals: np.ndarray, offsets: np.ndarray, p, q, heading):
    """Reflect ``q`` back across violated edges; fall back to ``p`` if it keeps escaping."""
    for _ in range(16):
        signed = normals @ q - offsets  # > 0 means outside that edge
        worst = int(np.argmax(signed))
        if signed[worst] <= 0:
            return q, heading
        nrm = normals[worst]
        q = q - 2.0 * signed[worst] * nrm
        d = np.array([math.cos(heading), math.sin(heading)])
        d = d - 2.0 * (d @ nrm) * nrm
        heading = math.atan2(d[1], d[0])
    return p.copy(), heading + math.pi


def _random_walk(
    poly: np.ndarray, n_steps: int, step_mean: float, kappa: float, bias: float, rng: np.random.Generator
) -> np.ndarray:
    e = np.roll(poly, -1, axis=0) - poly
    normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
    normals /= np.hypot(normals[:, 0], normals[:, 1])[:, None]
    offsets = np.einsum("ij,ij->i", normals, poly)

    lo, hi = poly.min(axis=0), poly.max(axis=0)
    while True:
        p = lo + rng.random(2) * (hi - lo)
        if inside_polygon(poly, p)[0]:
            break
    heading = rng.uniform(-math.pi, math.pi)
    turns = rng.vonmises(bias, kappa, size=n_steps)
    lengths = rng.gamma(4.0, step_mean / 4.0, size=n_steps)

    out = np.empty((n_steps, 2))
    out[0] = p
    for i in range(1, n_steps):
        heading += turns[i]
        q = p + lengths[i] * np.array([math.cos(heading), math.sin(heading)])
        p, heading = _reflect_into(poly, normals, offsets, p, q, heading)
        out[i] = p
    return out


def generate_synthetic(config: SynthConfig) -> Dataset:
    """Deterministic daily random walks, one trajectory per day."""
    children = np.random.SeedSequence(config.seed).spawn(config.n_days)
    trajectories = []
    for day in range(1, config.n_days + 1):
        regime = (day - 1) // config.days_per_regime
        patch_idx = (day - 1) % len(config._polygons)
        rng = np.random.default_rng(children[day - 1])
        xy = _random_walk(
            config._polygons[patch_idx],
            config.steps_per_day,
            config.step_length_mean[regime],
            config.turning_concentration[regime],
            config.turning_bias,
            rng,
        )
        t = np.arange(config.steps_per_day, dtype=float) * config.dt
        trajectories.append(Trajectory(t, xy, day=day, patch_id=patch_idx + 1))
    ds = Dataset(tuple(trajectories), config.maintenance_dates)
    return segment_periods(ds) if ds.maintenance_dates else ds


def group_by_period(trajectories: Iterable[Trajectory]) -> dict[int, list[Trajectory]]:
    ordered = sorted(trajectories, key=lambda tr: (tr.period_id if tr.period_id is not None else -1, tr.day))
    return {k: list(g) for k, g in groupby(ordered, key=lambda tr: tr.period_id)}
