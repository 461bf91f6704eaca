"""Model artifacts (weights blob + metadata) and per-epoch training logs."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
import torch

from markguard.pipeline.run import ModelHandle
from markguard.training import nets

SCORE_ORIENTATION = "1=genuine"


@dataclass(frozen=True)
class ModelMeta:
    architecture: str
    layer_count: int
    weight_count: int
    version: str
    train_seed: int
    score_orientation: str = SCORE_ORIENTATION
    canonical_size: int = 224

    def to_json_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "layer_count": self.layer_count,
            "weight_count": self.weight_count,
            "version": self.version,
            "train_seed": self.train_seed,
            "score_orientation": self.score_orientation,
            "canonical_size": self.canonical_size,
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "ModelMeta":
        return cls(
            architecture=str(d["architecture"]),
            layer_count=int(d["layer_count"]),
            weight_count=int(d["weight_count"]),
            version=str(d["version"]),
            train_seed=int(d["train_seed"]),
            score_orientation=str(d["score_orientation"]),
            canonical_size=int(d["canonical_size"]),
        )


@dataclass(frozen=True, eq=False)
class ModelArtifact:
    """Opaque serialized weights plus the metadata needed to rebuild them."""

    weights: bytes
    meta: ModelMeta

    @classmethod
    def from_network(cls, net: torch.nn.Module, meta: ModelMeta) -> "ModelArtifact":
        if nets.weight_count(net) != meta.weight_count:
            raise ValueError("meta.weight_count does not match the network")
        buf = io.BytesIO()
        torch.save(net.state_dict(), buf)
        return cls(weights=buf.getvalue(), meta=meta)

    def build_network(self) -> torch.nn.Module:
        net = nets.build(self.meta.architecture)
        state = torch.load(io.BytesIO(self.weights), map_location="cpu", weights_only=True)
        net.load_state_dict(state)
        if nets.weight_count(net) != self.meta.weight_count:
            raise ValueError("stored weight_count does not match the rebuilt network")
        net.eval()
        return net

    def save(self, dir_path) -> None:
        d = Path(dir_path)
        d.mkdir(parents=True, exist_ok=True)
        (d / "weights.pt").write_bytes(self.weights)
        with open(d / "meta.json", "w") as fh:
            json.dump(self.meta.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, dir_path) -> "ModelArtifact":
        d = Path(dir_path)
        with open(d / "meta.json") as fh:
            meta = ModelMeta.from_json_dict(json.load(fh))
        return cls(weights=(d / "weights.pt").read_bytes(), meta=meta)

    def batch_scorer(self):
        """Vectorized scoring: [N,224,224,3] float in [0,1] -> [N] scores."""
        net = self.build_network()

        def score(batch: np.ndarray) -> np.ndarray:
            x = torch.from_numpy(np.ascontiguousarray(batch, dtype=np.float32))
            x = x.permute(0, 3, 1, 2)
            with torch.no_grad():
                z = net(x)
            return torch.sigmoid(z).numpy().astype(float)

        return score

    def to_handle(self) -> ModelHandle:
        batched = self.batch_scorer()

        def score_one(pixels: np.ndarray) -> float:
            return float(batched(pixels[None])[0])

        return ModelHandle(version=self.meta.version, scorer=score_one)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float

    def to_json_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
            "val_accuracy": self.val_accuracy,
        }

    @classmethod
    def from_json_dict(cls, d: Mapping) -> "EpochRecord":
        return cls(
            epoch=int(d["epoch"]),
            train_loss=float(d["train_loss"]),
            val_loss=float(d["val_loss"]),
            val_accuracy=float(d["val_accuracy"]),
        )


@dataclass(frozen=True)
class TrainLog:
    epochs: tuple[EpochRecord, ...]
    stopped_early: bool
    best_epoch: int

    def __post_init__(self):
        object.__setattr__(self, "epochs", tuple(self.epochs))
        if not self.epochs:
            raise ValueError("a train log needs at least one epoch")
        if [r.epoch for r in self.epochs] != list(range(1, len(self.epochs) + 1)):
            raise ValueError("epochs must be numbered 1..n consecutively")
        losses = [r.val_loss for r in self.epochs]
        if self.best_epoch != 1 + int(np.argmin(losses)):
            raise ValueError("best_epoch must be the (first) argmin of val_loss")

    @property
    def best(self) -> EpochRecord:
        return self.epochs[self.best_epoch - 1]

    def to_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for r in self.epochs:
                fh.write(json.dumps(r.to_json_dict()) + "\n")
            fh.write(
                json.dumps({"stopped_early": self.stopped_early, "best_epoch": self.best_epoch})
                + "\n"
            )

    @classmethod
    def from_jsonl(cls, path) -> "TrainLog":
        lines = [json.loads(s) for s in Path(path).read_text().splitlines() if s.strip()]
        if not lines or "best_epoch" not in lines[-1]:
            raise ValueError("train log file must end with a summary line")
        summary = lines[-1]
        return cls(
            epochs=tuple(EpochRecord.from_json_dict(d) for d in lines[:-1]),
            stopped_early=bool(summary["stopped_early"]),
            best_epoch=int(summary["best_epoch"]),
        )
