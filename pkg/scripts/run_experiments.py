"""Regenerate the synthetic datasets and run every experiment into runs/.

    python3 scripts/run_experiments.py [--only patch maintenance null]
"""
import argparse
import sys
import time
from pathlib import Path

from topotrail import cli

ROOT = Path(__file__).resolve().parent.parent
STEPS = {
    "patch": [["classify-patch"], ["classify-patch", "--shuffle-labels", "--out", "{out}/shuffled"]],
    "maintenance": [["analyze"], ["distance-series"], ["barycenters"], ["classify-maintenance"]],
    "null": [["distance-series"], ["classify-maintenance"]],
}


def run(name: str) -> int:
    cfg = ROOT / "configs" / f"{name}.cfg"
    out = cli.load_config(cfg).out
    for argv in [["synth"]] + STEPS[name]:
        argv = [a.format(out=out) for a in argv]
        start = time.perf_counter()
        code = cli.main([argv[0], "--config", str(cfg), *argv[1:]])
        print(f"{name}: {' '.join(argv)} -> exit {code} in {time.perf_counter() - start:.1f} s", flush=True)
        if code:
            return code
    return 0


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--only", nargs="+", choices=sorted(STEPS), default=sorted(STEPS))
    for name in p.parse_args().only:
        code = run(name)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
