#!/usr/bin/env python3
"""Leakage control: train on a zero-severity corpus, where the two classes
are drawn from identical distributions, and verify held-out AUC sits at
chance.  Any systematic edge here would mean the pipeline leaks labels."""

import argparse
import sys
from pathlib import Path

from markguard.benchmark import BENCHMARK_SEEDS, run_chance_control


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--work-dir", required=True, type=Path,
        help="corpus directory; an existing corpus is reused",
    )
    ap.add_argument(
        "--seeds", default=",".join(str(s) for s in BENCHMARK_SEEDS),
        help="comma-separated training seeds",
    )
    args = ap.parse_args(argv)

    results = run_chance_control(args.work_dir, seeds=[int(s) for s in args.seeds.split(",")])
    ok = True
    for seed, value in results:
        inside = 0.45 <= value <= 0.55
        ok = ok and inside
        print(f"seed {seed}: test AUC {value:.4f}" + ("" if inside else "  <-- off chance"))
    print("PASS: all AUC values within [0.45, 0.55]" if ok else "FAIL: AUC outside [0.45, 0.55]")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
