"""Multi-architecture experiment matrix: train, calibrate, evaluate per row."""

from __future__ import annotations

from dataclasses import replace
from typing import Optional

import numpy as np

from markguard.decision import (
    Confusion,
    CostMatrix,
    EvalReport,
    ScoredSet,
    Truth,
    calibrate_band,
    evaluate,
)
from markguard.training import nets
from markguard.training.data import SplitArrays, load_aligned_dataset
from markguard.training.manifest import DatasetManifest, Split
from markguard.training.train import TrainConfig, train_classifier

_EMPTY_CONFUSION = Confusion(0, 0, 0, 0, 0)


def score_split(artifact, split: SplitArrays, batch_size: int = 256) -> ScoredSet:
    scorer = artifact.batch_scorer()
    scores = np.empty(len(split), dtype=float)
    for lo in range(0, len(split), batch_size):
        batch = split.pixels[lo : lo + batch_size].astype(np.float32) / 255.0
        scores[lo : lo + batch_size] = scorer(batch)
    labels = [Truth.GENUINE if y > 0.5 else Truth.COUNTERFEIT for y in split.labels]
    return ScoredSet(items=tuple(zip(scores.tolist(), labels)))


def run_experiment_matrix(
    manifest: DatasetManifest,
    architectures: list[str],
    cfg: TrainConfig,
    costs: CostMatrix,
    data: Optional[dict[Split, SplitArrays]] = None,
) -> list[EvalReport]:
    """One report row per architecture: train on the train split, calibrate
    a band on val scores with `costs`, evaluate on test.

    A row that fails (unknown key, training blow-up) is emitted with its
    error message and zeroed counts; remaining rows still run.
    """
    if not architectures:
        raise ValueError("need at least one architecture")
    manifest.require_nonempty_splits()
    if data is None:
        data = load_aligned_dataset(manifest)

    reports: list[EvalReport] = []
    for arch in architectures:
        try:
            artifact, _log = train_classifier(manifest, replace(cfg, architecture=arch), data=data)
            band = calibrate_band(score_split(artifact, data[Split.VAL]), costs)
            report = evaluate(
                score_split(artifact, data[Split.TEST]),
                band,
                artifact.meta.to_json_dict(),
            )
        except Exception as exc:  # noqa: BLE001 - row isolation is the contract
            try:
                spec = nets.get_spec(arch)
            except nets.UnknownArchitecture:
                spec = None
            reports.append(
                EvalReport(
                    architecture=arch,
                    layer_count=(spec.ref_layer_count or 0) if spec else 0,
                    weight_count=(spec.ref_weight_count or 0) if spec else 0,
                    rejection_rate=0.0,
                    accuracy=None,
                    confusion=_EMPTY_CONFUSION,
                    error=f"{type(exc).__name__}: {exc}",
                )
            )
            continue
        reports.append(report)
    return reports
