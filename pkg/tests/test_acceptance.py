"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

The experiment criteria run the real command line on freshly generated
synthetic data described by the files in configs/.
"""
import dataclasses
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from oracles import betti_numbers, brute_force_wasserstein, mst_edge_lengths, random_diagram
from topotrail import cli
from topotrail.learn import LabeledSample, accuracy, fit, gradient, objective, train_test_split
from topotrail.metric import barycenter, wasserstein
from topotrail.persistence import PersistenceDiagram, diagrams, lifetime_diagram, persistence_diagram, persistence_pairs
from topotrail.pipeline import image_matrix
from topotrail.rips import distance_matrix, rips_filtration
from topotrail.vectorize import eval_density, kernel, persistence_image

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def verdict(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, detail

    return emit


def D(*pts):
    return PersistenceDiagram(1, np.array(pts, dtype=float).reshape(-1, 2))


def test_betti_numbers_match_rank_oracle(verdict):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    bad = 0
    for _ in range(200):
        pts = rng.uniform(0, 10, size=(int(rng.integers(2, 8)), 2))
        d = distance_matrix(pts)
        pairs = persistence_pairs(rips_filtration(d))
        for eps in rng.uniform(0, 1.1 * d.max(), size=5):
            got = [sum(p.dim == k and p.birth <= eps < p.death for p in pairs) for k in (0, 1)]
            bad += tuple(got) != betti_numbers(d, eps)
    elapsed = time.perf_counter() - start
    verdict("betti oracle", bad == 0 and elapsed < 60, f"{bad} mismatches in 1000 checks, {elapsed:.1f} s (limit 60 s)")


def test_square_and_rectangle_loops(verdict):
    sq = diagrams(rips_filtration(distance_matrix([[0, 0], [1, 0], [1, 1], [0, 1]])))[1].points
    rect = diagrams(rips_filtration(distance_matrix([[0, 0], [2, 0], [2, 1], [0, 1]])))[1].points
    ok = (
        sq.shape == (1, 2)
        and rect.shape == (1, 2)
        and np.allclose(sq, [[1, math.sqrt(2)]], rtol=0, atol=1e-12)
        and np.allclose(rect, [[2, math.sqrt(5)]], rtol=0, atol=1e-12)
    )
    verdict("square/rectangle H1", ok, f"square {sq.tolist()}, rectangle {rect.tolist()}")


def test_h0_deaths_equal_mst(verdict):
    rng = np.random.default_rng(11)
    bad = 0
    for _ in range(100):
        pts = rng.uniform(0, 10, size=(int(rng.integers(2, 30)), 2))
        d = distance_matrix(pts)
        f = rips_filtration(d)
        raw = persistence_diagram(f, 0, "cap_at_eps_max", drop_zero=False)
        finite = persistence_diagram(f, 0, "drop", drop_zero=False)
        ok = len(raw) == len(pts) and np.allclose(np.sort(finite.deaths), mst_edge_lengths(d), rtol=0, atol=1e-12)
        bad += not ok
    verdict("H0 = MST", bad == 0, f"{bad} of 100 clouds disagree")


def test_matching_exact_and_metric(verdict):
    rng = np.random.default_rng(12)
    mismatches = sum(wasserstein(u, v) != brute_force_wasserstein(u, v)
                     for u, v in ((random_diagram(rng), random_diagram(rng)) for _ in range(200)))
    worst = 0.0
    for _ in range(200):
        a, b, c = (random_diagram(rng, 6) for _ in range(3))
        ab, ba, ac, bc = wasserstein(a, b), wasserstein(b, a), wasserstein(a, c), wasserstein(b, c)
        worst = max(worst, abs(ab - ba), wasserstein(a, a), ac - ab - bc, -ab)
    verdict("matching + metric axioms", mismatches == 0 and worst <= 1e-9,
            f"{mismatches} of 200 differ from enumeration, worst axiom violation {worst:.2e}")


def test_barycenter_properties(verdict):
    rng = np.random.default_rng(13)
    increases = 0
    for _ in range(50):
        ds = [D(*random_diagram(rng, 8)) for _ in range(3)]
        trace = barycenter(ds).energy_trace
        increases += any(b > a for a, b in zip(trace, trace[1:]))
    errs = [np.abs(barycenter([D([0, 2]), D([0, 4])], init_index=i).diagram.points - [[0, 3]]).max() for i in (0, 1)]
    d = D([0, 1], [1, 3], [2, 2.4])
    fixed = barycenter([d, d, d]).diagram.canonical().points
    ok = increases == 0 and max(errs) <= 1e-6 and np.array_equal(fixed, d.canonical().points)
    verdict("barycenter", ok, f"{increases} increasing traces, two-point error {max(errs):.1e}, fixed point kept")


def test_image_mass_and_monte_carlo(verdict):
    rng = np.random.default_rng(14)
    delta, out_of_range = 1e-3, 0
    for _ in range(50):
        k = int(rng.integers(1, 9))
        b = rng.uniform(0, 5, size=k)
        lt = lifetime_diagram(D(*np.stack([b, b + rng.uniform(0.05, 3, size=k)], axis=1)))
        total = kernel(lt, 20).total_weight
        s = persistence_image(lt, 20, delta).cells.sum()
        out_of_range += not ((1 - delta) * total <= s <= total)
    b = rng.uniform(0, 2, size=5)
    lt = lifetime_diagram(D(*np.stack([b, b + rng.uniform(0.2, 1.5, size=5)], axis=1)))
    img, kr = persistence_image(lt, 8), kernel(lt, 8)
    bx, ly = img.window.edges(8)
    worst = 0.0
    for i, j in rng.integers(0, 8, size=(10, 2)):
        xs, ys = rng.uniform(bx[i], bx[i + 1], 40000), rng.uniform(ly[j], ly[j + 1], 40000)
        vals = eval_density(kr, xs, ys) * (bx[i + 1] - bx[i]) * (ly[j + 1] - ly[j])
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        worst = max(worst, abs(vals.mean() - img.cells[i, j]) / se if se > 0 else 0.0)
    verdict("image mass + Monte Carlo", out_of_range == 0 and worst <= 3,
            f"{out_of_range} of 50 sums outside [(1-d)W, W], worst MC deviation {worst:.2f} SE")


def test_gradient_and_separable_images(verdict):
    rng = np.random.default_rng(15)
    Z, ys, h = rng.normal(size=(40, 8)), rng.choice([-1.0, 1.0], size=40), 1e-6
    worst = 0.0
    for _ in range(10):
        p = rng.normal(size=9)
        g = gradient(p, Z, ys, 1.0)
        fd = np.array([(objective(p + h * e, Z, ys, 1.0) - objective(p - h * e, Z, ys, 1.0)) / (2 * h) for e in np.eye(9)])
        worst = max(worst, np.linalg.norm(fd - g) / np.linalg.norm(g))
    # class 0: one short loop; class 1: one long loop, both with small jitter
    pds, labels = [], []
    for i in range(120):
        life = 1.0 if i % 2 == 0 else 3.0
        b = rng.uniform(0.5, 1.5)
        pds.append(D([b, b + life * rng.uniform(0.8, 1.2)], [b, b + rng.uniform(0.1, 0.3)]))
        labels.append(i % 2)
    X, _ = image_matrix(pds, 20, 1e-3)
    tr, te = train_test_split([LabeledSample(x, y) for x, y in zip(X, labels)], 0.65, seed=0)
    acc = accuracy(fit(tr), te)
    verdict("gradient + separable images", worst <= 1e-5 and acc >= 0.95,
            f"worst relative gradient error {worst:.1e}, test accuracy {acc:.3f}")


def _config(name: str, tmp: Path) -> Path:
    cfg = cli.load_config(CONFIGS / f"{name}.cfg")
    cfg = dataclasses.replace(cfg, input=str(tmp / "dataset.csv"), maintenance=str(tmp / "maintenance.txt"), out=str(tmp))
    lines = [f"{k} = {'' if v is None else v}" for k, v in cfg.echo().items()]
    path = tmp / f"{name}.cfg"
    path.write_text("\n".join(lines) + "\n")
    return path


def _report(tmp: Path) -> dict:
    return json.loads((tmp / "report.json").read_text())


def test_patch_experiment(verdict, tmp_path):
    start = time.perf_counter()
    cfg = str(_config("patch", tmp_path))
    assert cli.main(["synth", "--config", cfg]) == 0
    assert cli.main(["classify-patch", "--config", cfg]) == 0
    acc = _report(tmp_path)["accuracy"]
    assert cli.main(["classify-patch", "--config", cfg, "--shuffle-labels"]) == 0
    shuffled = _report(tmp_path)
    elapsed = time.perf_counter() - start
    perm = shuffled["permutation_mean_accuracy"]
    ok = acc >= 0.8 and abs(perm - 0.5) <= 0.15 and elapsed < 300
    verdict("patch experiment", ok,
            f"accuracy {acc:.3f}, shuffled-label mean {perm:.3f} (single shuffle {shuffled['accuracy']:.3f}), "
            f"{elapsed:.0f} s")


@pytest.fixture(scope="module")
def maintenance_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("maintenance")
    cfg = str(_config("maintenance", tmp))
    assert cli.main(["synth", "--config", cfg]) == 0
    return tmp, cfg


def test_maintenance_experiment(verdict, maintenance_run, tmp_path):
    tmp, cfg = maintenance_run
    assert cli.main(["classify-maintenance", "--config", cfg]) == 0
    rep = _report(tmp)
    ncfg = str(_config("null", tmp_path))
    assert cli.main(["synth", "--config", ncfg]) == 0
    assert cli.main(["classify-maintenance", "--config", ncfg]) == 0
    null = _report(tmp_path)
    ok = rep["accuracy"] >= 0.8 and (rep["n_train"], rep["n_test"]) == (33, 17) and abs(null["accuracy"] - 0.5) <= 0.2
    verdict("maintenance experiment", ok,
            f"accuracy {rep['accuracy']:.3f} with split {rep['n_train']}/{rep['n_test']}, "
            f"null control {null['accuracy']:.3f}")


def test_series_peaks_at_maintenance(verdict, maintenance_run):
    tmp, cfg = maintenance_run
    assert cli.main(["distance-series", "--config", cfg]) == 0
    rows = (tmp / "series.csv").read_text().splitlines()[1:]
    series = [float(r.split(",")[1]) for r in rows]
    date = int((tmp / "maintenance.txt").read_text().split()[0])
    # entry i compares days i+1 and i+2 and is placed at the later day
    peak_day = int(np.argmax(series)) + 2
    verdict("series peak", abs(peak_day - date) <= 1, f"maximum at day {peak_day}, maintenance on day {date}")


def test_barycenter_halves_resemble_period(verdict, maintenance_run):
    tmp, cfg = maintenance_run
    c = cli.load_config(cfg)
    ds = cli.load_dataset(c)
    s = cli.period_barycenters(ds.for_patch(cli._select_patch(ds, c)), c)
    h1, h2 = s.half_distances
    across = s.period_distances[(0, 1)]
    verdict("barycenter halves", h1 < across and h2 < across,
            f"W(half1, P1) = {h1:.3f}, W(half2, P1) = {h2:.3f}, W(P1, P2) = {across:.3f}")
