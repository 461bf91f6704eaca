"""Desk-scale end-to-end runs: the seeded benchmark, the chance-level
control, and the spatial-invariance probe.

These are the standing experiments that demonstrate the whole stack
(generator -> alignment -> training -> calibration -> evaluation) hits its
targets on a single CPU.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from markguard.decision import (
    CostMatrix,
    EvalReport,
    ScoredSet,
    ThresholdBand,
    calibrate_band,
    evaluate,
)
from markguard.geometry import AffineParams
from markguard.pipeline.aligners import GeometricAligner
from markguard.pipeline.run import ModelHandle, score_mark
from markguard.pipeline.types import MarkDetection
from markguard.synthdata import (
    DESK_SCALE_CONFIG,
    SCENE_SIZE,
    GenConfig,
    OutOfFrame,
    draw_genuine_params,
    generate_dataset,
    mark_canvas_bbox,
    render_mark,
)
from markguard.training import (
    DatasetManifest,
    Split,
    TrainConfig,
    load_aligned_dataset,
    train_classifier,
)
from markguard.training.matrix import score_split

BENCHMARK_COSTS = CostMatrix(
    cost_false_genuine=1.0, cost_false_counterfeit=1.0, cost_reject=0.5
)
BENCHMARK_SEEDS = (1, 2, 3)

# Chance-level control: a big test split keeps the null AUC band tight
# (std ~ sqrt(1/(6*600)) ~ 0.017, so [0.45, 0.55] is a 3-sigma corridor).
CHANCE_CONFIG = GenConfig(
    n_genuine=1200,
    n_counterfeit=1200,
    severity=0.0,
    seed=0,
    split_fractions=(0.4, 0.1, 0.5),
)


def average_ranks(x: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x), dtype=float)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auc(scored: ScoredSet) -> float:
    """Area under the ROC curve via the rank statistic (ties averaged)."""
    scores = scored.scores()
    genuine = scored.genuine_mask()
    n1 = int(genuine.sum())
    n0 = len(scores) - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both classes present")
    r = average_ranks(scores)
    return float((r[genuine].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


@dataclass(frozen=True)
class SeedOutcome:
    seed: int
    report: EvalReport
    band: ThresholdBand
    epochs_run: int
    best_epoch: int
    train_seconds: float
    artifact_dir: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "report": self.report.to_json_dict(),
            "band": {"lower": self.band.lower, "upper": self.band.upper, "version": self.band.version},
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "train_seconds": self.train_seconds,
            "artifact_dir": self.artifact_dir,
        }


@dataclass(frozen=True)
class BenchmarkResult:
    outcomes: tuple[SeedOutcome, ...]
    generate_seconds: float
    load_seconds: float
    total_seconds: float

    def passes(self, min_accuracy: float = 0.95, max_rejection: float = 0.10) -> bool:
        return all(
            o.report.accuracy is not None
            and o.report.accuracy >= min_accuracy
            and o.report.rejection_rate <= max_rejection
            for o in self.outcomes
        )

    def to_json_dict(self) -> dict:
        return {
            "outcomes": [o.to_json_dict() for o in self.outcomes],
            "generate_seconds": self.generate_seconds,
            "load_seconds": self.load_seconds,
            "total_seconds": self.total_seconds,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")


def _ensure_corpus(work_dir: Path, gen_config: GenConfig) -> tuple[DatasetManifest, float]:
    """Generate the corpus unless an identical one is already in work_dir."""
    cfg_path = work_dir / "gen_config.json"
    manifest_path = work_dir / "manifest.csv"
    if cfg_path.exists() and manifest_path.exists():
        if GenConfig.from_json_file(cfg_path) == gen_config:
            return DatasetManifest.from_csv(manifest_path), 0.0
    t0 = time.perf_counter()
    manifest, _ = generate_dataset(gen_config, work_dir)
    return manifest, time.perf_counter() - t0


def run_benchmark(
    work_dir,
    seeds: Sequence[int] = BENCHMARK_SEEDS,
    gen_config: GenConfig = DESK_SCALE_CONFIG,
    costs: CostMatrix = BENCHMARK_COSTS,
    train_config: Optional[TrainConfig] = None,
) -> BenchmarkResult:
    """The standing end-to-end benchmark: one desk-scale corpus, one trained
    classifier per seed, a cost-calibrated band, and test-split reports."""
    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    if train_config is None:
        train_config = TrainConfig(architecture="small-conv")
    t_start = time.perf_counter()

    manifest, gen_secs = _ensure_corpus(work_dir, gen_config)
    t0 = time.perf_counter()
    data = load_aligned_dataset(manifest)
    load_secs = time.perf_counter() - t0

    outcomes = []
    for seed in seeds:
        t0 = time.perf_counter()
        artifact, log = train_classifier(manifest, replace(train_config, seed=seed), data=data)
        train_secs = time.perf_counter() - t0
        val_scores = score_split(artifact, data[Split.VAL])
        band = calibrate_band(val_scores, costs)
        report = evaluate(
            score_split(artifact, data[Split.TEST]), band, artifact.meta.to_json_dict()
        )
        # saved artifacts double as a ready-to-scan model registry for the service
        artifact_dir = work_dir / "artifacts" / artifact.meta.version
        artifact.save(artifact_dir)
        val_scores.to_csv(artifact_dir / "val_scores.csv")
        outcomes.append(
            SeedOutcome(
                seed=seed,
                report=report,
                band=band,
                epochs_run=len(log.epochs),
                best_epoch=log.best_epoch,
                train_seconds=train_secs,
                artifact_dir=str(artifact_dir),
            )
        )
    result = BenchmarkResult(
        outcomes=tuple(outcomes),
        generate_seconds=gen_secs,
        load_seconds=load_secs,
        total_seconds=time.perf_counter() - t_start,
    )
    result.save(work_dir / "benchmark.json")
    return result


def run_chance_control(
    work_dir,
    seeds: Sequence[int] = BENCHMARK_SEEDS,
    gen_config: GenConfig = CHANCE_CONFIG,
    train_config: Optional[TrainConfig] = None,
) -> list[tuple[int, float]]:
    """Train on a zero-severity corpus (identical class distributions) and
    report test AUC per seed; values should hover at chance."""
    work_dir = Path(work_dir)
    work_dir.mkdir(parents=True, exist_ok=True)
    if train_config is None:
        # accuracy is irrelevant here, so keep the epoch budget small
        train_config = TrainConfig(architecture="small-conv", epochs_max=8, patience=3)
    manifest, _ = _ensure_corpus(work_dir, gen_config)
    data = load_aligned_dataset(manifest)
    out = []
    for seed in seeds:
        artifact, _log = train_classifier(manifest, replace(train_config, seed=seed), data=data)
        out.append((seed, auc(score_split(artifact, data[Split.TEST]))))
    return out


def spatial_invariance_scores(
    handle: ModelHandle,
    n: int = 50,
    seed: int = 2024,
    severity_params=None,
) -> np.ndarray:
    """Scores of one fixed mark re-rendered under n random in-range affine
    perturbations (rotation +/-20 deg, translation +/-10% of frame, scale
    0.8-1.2), localized by ground truth and aligned by the geometric path."""
    rng = np.random.default_rng(seed)
    params = severity_params or draw_genuine_params(np.random.default_rng(seed + 1))
    aligner = GeometricAligner()
    scores = np.empty(n)
    k = 0
    attempts = 0
    while k < n:
        attempts += 1
        if attempts > 20 * n:
            raise RuntimeError("too many out-of-frame placements")
        transform = AffineParams(
            rotation=float(rng.uniform(-20, 20)),
            translation=(
                float(rng.uniform(-0.10, 0.10) * SCENE_SIZE),
                float(rng.uniform(-0.10, 0.10) * SCENE_SIZE),
            ),
            scale=float(rng.uniform(0.8, 1.2)),
        )
        try:
            image = render_mark(
                params,
                transform,
                background="fabric_texture",
                rng_seed=7,
                lighting_jitter=0.0,
                sensor_noise=1.0,
            )
        except OutOfFrame:
            # the generator resamples such placements; mirror that policy
            continue
        detection = MarkDetection(bbox=mark_canvas_bbox(transform), confidence=1.0)
        aligned = aligner.align(image, detection)
        scores[k] = score_mark(aligned, handle).value
        k += 1
    return scores
