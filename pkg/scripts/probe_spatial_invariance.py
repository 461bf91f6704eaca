#!/usr/bin/env python3
"""Spatial-invariance probe: re-render one fixed mark under random in-range
placements (rotation +/-20 deg, translation +/-10% of frame, scale 0.8-1.2),
run each through localization-free alignment and a trained model, and report
the score spread.  A well-aligned pipeline keeps the spread small."""

import argparse
import sys
from pathlib import Path

import numpy as np

from markguard.benchmark import spatial_invariance_scores
from markguard.training import ModelArtifact


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--artifact", required=True, type=Path, help="trained model directory")
    ap.add_argument("--n", type=int, default=50, help="number of perturbations")
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--max-spread", type=float, default=0.1, help="pass threshold on max - min")
    args = ap.parse_args(argv)

    artifact = ModelArtifact.load(args.artifact)
    scores = spatial_invariance_scores(artifact.to_handle(), n=args.n, seed=args.seed)
    spread = float(scores.max() - scores.min())
    print(
        f"{args.n} perturbations: min {scores.min():.4f}  median {np.median(scores):.4f}  "
        f"max {scores.max():.4f}  spread {spread:.4f}"
    )
    if spread > args.max_spread:
        print(f"FAIL: spread {spread:.4f} exceeds {args.max_spread}")
        return 1
    print(f"PASS: spread {spread:.4f} within {args.max_spread}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
