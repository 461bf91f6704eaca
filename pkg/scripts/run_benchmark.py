#!/usr/bin/env python3
"""Desk-scale benchmark: train the default classifier once per seed on the
standard corpus, calibrate a band with the benchmark costs, and report
test accuracy at the achieved rejection rate."""

import argparse
import sys
from pathlib import Path

from markguard.benchmark import BENCHMARK_SEEDS, run_benchmark


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--work-dir", required=True, type=Path,
        help="corpus and artifact directory; an existing corpus is reused",
    )
    ap.add_argument(
        "--seeds", default=",".join(str(s) for s in BENCHMARK_SEEDS),
        help="comma-separated training seeds",
    )
    ap.add_argument("--out", type=Path, default=None, help="write the full result as JSON")
    args = ap.parse_args(argv)

    result = run_benchmark(args.work_dir, seeds=[int(s) for s in args.seeds.split(",")])
    for o in result.outcomes:
        print(
            f"seed {o.seed}: accuracy {o.report.accuracy:.4f} at rejection "
            f"{o.report.rejection_rate:.4f}  band [{o.band.lower:.4f}, {o.band.upper:.4f}]  "
            f"epochs {o.epochs_run} (best {o.best_epoch}), {o.train_seconds:.0f}s"
        )
    print(
        f"total {result.total_seconds:.0f}s "
        f"(generate {result.generate_seconds:.0f}s, load {result.load_seconds:.0f}s)"
    )
    if args.out is not None:
        result.save(args.out)
    if not result.passes():
        print("FAIL: at least one seed missed accuracy >= 0.95 at rejection <= 0.10")
        return 1
    print("PASS: every seed met accuracy >= 0.95 at rejection <= 0.10")
    return 0


if __name__ == "__main__":
    sys.exit(main())
