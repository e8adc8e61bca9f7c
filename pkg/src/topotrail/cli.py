"""``topotrail`` command line: the analysis pipeline and the classification experiments."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import learn, plots
from .errors import NumericError, ValidationError
from .metric import barycenter, wasserstein, wasserstein_series
from .persistence import PersistenceDiagram, diagrams, diagrams_to_json, lifetime_diagram
from .pipeline import h1_diagrams, image_matrix
from .rips import distance_matrix, rips_filtration
from .trajectory import (
    Dataset,
    SynthConfig,
    Trajectory,
    generate_synthetic,
    parse_trajectory_csv,
    subsample,
    write_dataset_csv,
    write_maintenance,
)
from .vectorize import persistence_image, shared_window, write_csv, write_pgm

log = logging.getLogger("topotrail")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4


@dataclass
class ExperimentConfig:
    input: str = ""
    maintenance: str = ""
    out: str = "out"
    day: int | None = None
    patch: int | None = None
    subsample: int = 60
    subsample_strategy: str = "maxmin"
    resolution: int = 20
    delta: float = 1e-3
    C: float = 1.0
    tol: float = 1e-6
    max_iter: int = 5000
    train_fraction: float = 0.65
    seed: int = 0
    target_patch: int | None = None
    shuffle_labels: bool = False
    n_permutations: int = 20
    maintenance_date: int | None = None
    barycenter_tol: float = 1e-8
    barycenter_max_iter: int = 100
    synth_patches: str = "0,0 60,0 60,60 0,60"
    synth_days_per_regime: int = 5
    synth_steps_per_day: int = 400
    synth_step_lengths: str = "0.5,4.0"
    synth_turning: str = "8,8"
    synth_turning_bias: float = 0.0

    def echo(self) -> dict:
        return dataclasses.asdict(self)


_OPTIONAL_INT = {"day", "patch", "target_patch", "maintenance_date"}
_PATH_KEYS = {"input", "maintenance", "out"}


def _convert(key: str, raw: str):
    default = getattr(ExperimentConfig, key)
    if key in _OPTIONAL_INT:
        return None if raw.lower() in ("", "none") else int(raw)
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(raw)
    return type(default)(raw)


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment; unknown keys are rejected."""
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, value)
        except ValueError:
            raise ValidationError(f"config line {lineno}: bad value {value!r} for {key!r}") from None
        if key in _PATH_KEYS and base_dir is not None and values[key] and not Path(values[key]).is_absolute():
            values[key] = os.path.normpath(base_dir / values[key])
    return ExperimentConfig(**values)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)


def synth_config(cfg: ExperimentConfig) -> SynthConfig:
    try:
        patches = tuple(
            tuple(tuple(float(c) for c in v.split(",")) for v in poly.split())
            for poly in cfg.synth_patches.split(";")
            if poly.strip()
        )
        lengths = tuple(float(v) for v in cfg.synth_step_lengths.split(","))
        turning = tuple(float(v) for v in cfg.synth_turning.split(","))
    except ValueError as exc:
        raise ValidationError(f"bad synthetic parameters: {exc}") from None
    return SynthConfig(
        patches=patches,
        days_per_regime=cfg.synth_days_per_regime,
        steps_per_day=cfg.synth_steps_per_day,
        step_length_mean=lengths,
        turning_concentration=turning,
        seed=cfg.seed,
        turning_bias=cfg.synth_turning_bias,
    )


def load_dataset(cfg: ExperimentConfig) -> Dataset:
    if not cfg.input:
        raise ValidationError("config key 'input' (dataset CSV) is required")
    with open(cfg.input, encoding="utf-8", newline="") as fh:
        if cfg.maintenance:
            with open(cfg.maintenance, encoding="utf-8") as mh:
                return parse_trajectory_csv(fh, mh)
        return parse_trajectory_csv(fh)


class _Writer:
    """Collects every file a command writes."""

    def __init__(self, out: str | Path):
        self.root = Path(out)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[Path] = []

    def text(self, name: str, content: str) -> Path:
        path = self.root / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        self.files.append(path)
        return path

    def stream(self, name: str, fn) -> Path:
        path = self.root / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fn(fh)
        self.files.append(path)
        return path


def _select_patch(ds: Dataset, cfg: ExperimentConfig) -> int:
    patches = ds.patches()
    if cfg.patch is not None:
        if cfg.patch not in patches:
            raise ValidationError(f"patch {cfg.patch} not in dataset (patches: {patches})")
        return cfg.patch
    if len(patches) > 1:
        log.warning("several patches present; using patch %d (set 'patch' to choose)", patches[0])
    return patches[0]


def _diagrams(trs: Sequence[Trajectory], cfg: ExperimentConfig) -> list[PersistenceDiagram]:
    return h1_diagrams(trs, cfg.subsample, cfg.subsample_strategy)


# -- analyze -----------------------------------------------------------------------------


def cmd_analyze(cfg: ExperimentConfig) -> list[Path]:
    """Trajectory, diagram, lifetime diagram and image of one (day, patch)."""
    ds = load_dataset(cfg)
    patch = _select_patch(ds, cfg)
    day = cfg.day if cfg.day is not None else min(tr.day for tr in ds.for_patch(patch))
    tr = ds.get(day, patch)
    sub = subsample(tr, cfg.subsample_strategy, cfg.subsample)
    dg = diagrams(rips_filtration(distance_matrix(sub)))
    lt = lifetime_diagram(dg[1])
    img = persistence_image(lt, cfg.resolution, cfg.delta)

    w = _Writer(cfg.out)
    stem = f"d{day}_p{patch}"
    w.text(f"{stem}_trajectory.svg", plots.trajectory_svg(tr.xy, f"day {day}, patch {patch}"))
    w.text(f"{stem}_diagram.svg", plots.diagram_svg([dg[0], dg[1]], "persistence diagram"))
    w.text(f"{stem}_lifetime.svg", plots.lifetime_svg(lt.points, "lifetime diagram (H1)"))
    w.stream(f"{stem}_image.pgm", lambda fh: write_pgm(img, fh))
    w.stream(f"{stem}_image.csv", lambda fh: write_csv(img, fh))
    w.text(f"{stem}_diagram.json", diagrams_to_json([dg[0], dg[1]]) + "\n")
    return w.files


# -- distance series ---------------------------------------------------------------------


def distance_series(trs: Sequence[Trajectory], cfg: ExperimentConfig) -> tuple[list[int], list[float]]:
    """Days (of the later trajectory in each pair) and consecutive H1 distances."""
    trs = sorted(trs, key=lambda tr: tr.day)
    if len(trs) < 2:
        raise ValidationError("need at least two days for a distance series")
    series = wasserstein_series(_diagrams(trs, cfg))
    return [tr.day for tr in trs[1:]], series


def cmd_distance_series(cfg: ExperimentConfig) -> list[Path]:
    ds = load_dataset(cfg)
    patch = _select_patch(ds, cfg)
    days, series = distance_series(ds.for_patch(patch), cfg)
    w = _Writer(cfg.out)
    lines = ["index,distance"] + [f"{i},{v!r}" for i, v in enumerate(series)]
    w.text("series.csv", "\n".join(lines) + "\n")
    w.text("series.svg", plots.series_svg(days, series, list(ds.maintenance_dates), f"patch {patch}"))
    return w.files


# -- barycenters -------------------------------------------------------------------------


@dataclass
class BarycenterSummary:
    periods: dict[int, PersistenceDiagram]
    halves: tuple[PersistenceDiagram, PersistenceDiagram] | None
    first_period: int
    period_distances: dict[tuple[int, int], float]
    half_distances: tuple[float, float] | None


def period_barycenters(trs: Sequence[Trajectory], cfg: ExperimentConfig) -> BarycenterSummary:
    by_period: dict[int, list[Trajectory]] = {}
    for tr in sorted(trs, key=lambda tr: tr.day):
        by_period.setdefault(tr.period_id or 0, []).append(tr)
    top = max(by_period)
    for k in range(top + 1):
        if k not in by_period:
            log.warning("period %d has no trajectories; skipped", k)

    def bary(group):
        return barycenter(_diagrams(group, cfg), tol=cfg.barycenter_tol, max_iter=cfg.barycenter_max_iter).diagram

    periods = {k: bary(g) for k, g in sorted(by_period.items())}
    first = min(by_period)
    group = by_period[first]
    halves = half_distances = None
    if len(group) >= 2:
        mid = len(group) // 2
        halves = (bary(group[:mid]), bary(group[mid:]))
        half_distances = (wasserstein(halves[0], periods[first]), wasserstein(halves[1], periods[first]))
    else:
        log.warning("first period has a single day; half-interval comparison skipped")
    keys = sorted(periods)
    dist = {(a, b): wasserstein(periods[a], periods[b]) for i, a in enumerate(keys) for b in keys[i + 1 :]}
    return BarycenterSummary(periods, halves, first, dist, half_distances)


def cmd_barycenters(cfg: ExperimentConfig) -> list[Path]:
    ds = load_dataset(cfg)
    patch = _select_patch(ds, cfg)
    s = period_barycenters(ds.for_patch(patch), cfg)
    named = {f"barycenter_period{k}": pd for k, pd in s.periods.items()}
    if s.halves is not None:
        named[f"half1_period{s.first_period}"] = s.halves[0]
        named[f"half2_period{s.first_period}"] = s.halves[1]
    lts = {name: lifetime_diagram(pd) for name, pd in named.items()}
    window = shared_window(lts.values(), cfg.resolution, cfg.delta)

    w = _Writer(cfg.out)
    for name, pd in named.items():
        img = persistence_image(lts[name], cfg.resolution, cfg.delta, window)
        w.text(f"{name}.json", diagrams_to_json([pd]) + "\n")
        w.stream(f"{name}.pgm", lambda fh: write_pgm(img, fh))
        w.stream(f"{name}.csv", lambda fh: write_csv(img, fh))

    lines = [f"patch {patch}: barycenters of {len(s.periods)} period(s)"]
    for (a, b), v in s.period_distances.items():
        lines.append(f"W(period {a}, period {b}) = {v:.6g}")
    if s.half_distances is not None:
        for i, v in enumerate(s.half_distances, start=1):
            lines.append(f"W(half {i}, period {s.first_period}) = {v:.6g}")
    w.text("barycenters.txt", "\n".join(lines) + "\n")
    return w.files


# -- classification ----------------------------------------------------------------------


@dataclass
class ExperimentReport:
    task: str
    accuracy: float
    n_train: int
    n_test: int
    class_counts: dict
    train_indices: list[int]
    test_indices: list[int]
    config: dict
    files: list[str] = field(default_factory=list)
    permutation_mean_accuracy: float | None = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=1)


def _split_fit(X, labels, cfg: ExperimentConfig, seed: int):
    train_idx, test_idx = learn.train_test_split(len(labels), cfg.train_fraction, seed, labels=labels)
    tr = [learn.LabeledSample(X[i], int(labels[i])) for i in train_idx]
    te = [learn.LabeledSample(X[i], int(labels[i])) for i in test_idx]
    model = learn.fit(tr, cfg.C, cfg.max_iter, cfg.tol)
    return model, train_idx, test_idx, learn.accuracy(model, te)


def classify(trs: Sequence[Trajectory], labels, cfg: ExperimentConfig, task: str, pds=None):
    """Images on a shared window, seeded split, fit, score.

    With ``cfg.shuffle_labels`` the labels are permuted first, and the mean
    accuracy over ``cfg.n_permutations`` independent permutations is also
    reported as the chance baseline.
    """
    labels = np.asarray(labels, dtype=int)
    if len(set(labels.tolist())) < 2:
        raise ValidationError(f"{task}: all samples carry the same label")
    if pds is None:
        pds = _diagrams(trs, cfg)
    X, _ = image_matrix(pds, cfg.resolution, cfg.delta)
    perm_mean = None
    if cfg.shuffle_labels:
        accs = []
        for i in range(max(cfg.n_permutations, 1)):
            shuffled = np.random.default_rng([cfg.seed, i]).permutation(labels)
            accs.append(_split_fit(X, shuffled, cfg, cfg.seed)[3])
        perm_mean = float(np.mean(accs))
        labels = np.random.default_rng([cfg.seed, 0]).permutation(labels)
    model, train_idx, test_idx, acc = _split_fit(X, labels, cfg, cfg.seed)
    counts = {
        "train": {str(c): int(np.sum(labels[train_idx] == c)) for c in (0, 1)},
        "test": {str(c): int(np.sum(labels[test_idx] == c)) for c in (0, 1)},
    }
    report = ExperimentReport(
        task, acc, len(train_idx), len(test_idx), counts, train_idx.tolist(), test_idx.tolist(), cfg.echo(),
        permutation_mean_accuracy=perm_mean,
    )
    return report, model, X, labels


def _write_experiment(cfg, trs, report: ExperimentReport, model, X, labels) -> ExperimentReport:
    w = _Writer(cfg.out)
    header = "index,day,patch,label," + ",".join(f"f{i}" for i in range(X.shape[1]))
    rows = [header] + [
        f"{i},{tr.day},{tr.patch_id},{int(l)}," + ",".join(repr(float(v)) for v in x)
        for i, (tr, l, x) in enumerate(zip(trs, labels, X))
    ]
    w.text("features.csv", "\n".join(rows) + "\n")
    w.text("model.json", model.to_json() + "\n")
    names = [p.name for p in w.files] + ["summary.txt", "report.json"]
    report.files = names
    summary = [
        f"task: {report.task}",
        f"accuracy: {report.accuracy:.4f} ({report.n_test} test / {report.n_train} train samples)",
        f"class counts: {json.dumps(report.class_counts)}",
    ]
    if report.permutation_mean_accuracy is not None:
        summary.append(f"shuffled-label mean accuracy over {cfg.n_permutations} permutations: "
                       f"{report.permutation_mean_accuracy:.4f}")
    w.text("summary.txt", "\n".join(summary) + "\n")
    w.text("report.json", report.to_json() + "\n")
    return report


def cmd_classify_patch(cfg: ExperimentConfig) -> ExperimentReport:
    ds = load_dataset(cfg)
    if cfg.target_patch is None:
        raise ValidationError("target_patch is required")
    patches = ds.patches()
    if len(patches) < 2:
        raise ValidationError("patch classification needs at least two patches")
    if cfg.target_patch not in patches:
        raise ValidationError(f"target patch {cfg.target_patch} absent (patches: {patches})")
    trs = sorted(ds.trajectories, key=lambda tr: tr.key)
    labels = [int(tr.patch_id == cfg.target_patch) for tr in trs]
    report, model, X, labels = classify(trs, labels, cfg, "patch")
    return _write_experiment(cfg, trs, report, model, X, labels)


def maintenance_samples(ds: Dataset, cfg: ExperimentConfig) -> tuple[list[Trajectory], list[int]]:
    """Days of one patch on either side of one maintenance date, labelled 0 before, 1 from it on."""
    patch = _select_patch(ds, cfg)
    dates = list(ds.maintenance_dates)
    if cfg.maintenance_date is not None:
        if cfg.maintenance_date not in dates:
            raise ValidationError(f"maintenance date {cfg.maintenance_date} not in {dates}")
        date = cfg.maintenance_date
    elif dates:
        date = dates[0]
    else:
        raise ValidationError("dataset has no maintenance dates")
    k = dates.index(date)
    lo = dates[k - 1] if k > 0 else -np.inf
    hi = dates[k + 1] if k + 1 < len(dates) else np.inf
    trs = [tr for tr in ds.for_patch(patch) if lo <= tr.day < hi]
    labels = [int(tr.day >= date) for tr in trs]
    if min(labels.count(0), labels.count(1)) < 2:
        raise ValidationError(f"need at least two days on each side of maintenance date {date}")
    return trs, labels


def cmd_classify_maintenance(cfg: ExperimentConfig) -> ExperimentReport:
    ds = load_dataset(cfg)
    trs, labels = maintenance_samples(ds, cfg)
    report, model, X, labels = classify(trs, labels, cfg, "maintenance")
    return _write_experiment(cfg, trs, report, model, X, labels)


# -- synth -------------------------------------------------------------------------------


def cmd_synth(cfg: ExperimentConfig) -> list[Path]:
    ds = generate_synthetic(synth_config(cfg))
    w = _Writer(cfg.out)
    w.stream("dataset.csv", lambda fh: write_dataset_csv(ds, fh))
    w.stream("maintenance.txt", lambda fh: write_maintenance(ds.maintenance_dates, fh))
    return w.files


COMMANDS = {
    "analyze": cmd_analyze,
    "distance-series": cmd_distance_series,
    "barycenters": cmd_barycenters,
    "classify-patch": cmd_classify_patch,
    "classify-maintenance": cmd_classify_maintenance,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topotrail", description=__doc__)
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--seed", type=int)
    p.add_argument("--target-patch", type=int)
    p.add_argument("--shuffle-labels", action="store_true")
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.out is not None:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.target_patch is not None:
        cfg.target_patch = args.target_patch
    if args.shuffle_labels:
        cfg.shuffle_labels = True
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        result = COMMANDS[args.command](cfg)
    except (ValidationError, LookupError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except NumericError as exc:
        log.error("numeric error: %s", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    if isinstance(result, ExperimentReport):
        print(f"accuracy {result.accuracy:.4f} on {result.n_test} test samples")
        if result.permutation_mean_accuracy is not None:
            print(f"shuffled-label mean accuracy {result.permutation_mean_accuracy:.4f}")
        for name in result.files:
            print(Path(cfg.out) / name)
    else:
        for path in result:
            print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
