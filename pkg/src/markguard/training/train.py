"""Training loops: the binary mark classifier and the pose-regressor aligner.

Both are seeded end to end: network init from torch.manual_seed, shuffling
and augmentation draws from one numpy generator, so a rerun with the same
config and manifest reproduces the log and the weights.
"""

from __future__ import annotations

import copy
import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional

import cv2
import numpy as np
import torch

from markguard.geometry import AffineParams
from markguard.pipeline.types import CANONICAL_SIZE
from markguard.training import nets
from markguard.training.artifact import EpochRecord, ModelArtifact, ModelMeta, TrainLog
from markguard.training.data import AugConfig, SplitArrays, augment, load_aligned_dataset
from markguard.training.early_stopping import best_epoch as best_epoch_of
from markguard.training.early_stopping import should_stop
from markguard.training.losses import bce_from_logits, pose_loss
from markguard.training.manifest import DatasetManifest, Split


class NonFiniteLoss(RuntimeError):
    """Training loss went NaN/inf; aborted with diagnostics."""


@dataclass(frozen=True)
class TrainConfig:
    architecture: str = "small-conv"
    epochs_max: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    patience: int = 5
    seed: int = 0
    augmentation: AugConfig = field(default_factory=AugConfig)

    def __post_init__(self):
        if self.epochs_max < 1:
            raise ValueError("epochs_max must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")

    def to_json_dict(self) -> dict:
        return {
            "architecture": self.architecture,
            "epochs_max": self.epochs_max,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "patience": self.patience,
            "seed": self.seed,
            "augmentation": self.augmentation.to_json_dict(),
        }

    @classmethod
    def from_json_dict(cls, d) -> "TrainConfig":
        # missing keys fall back to the dataclass defaults, like GenConfig
        base = cls()
        aug = d.get("augmentation")
        return cls(
            architecture=str(d.get("architecture", base.architecture)),
            epochs_max=int(d.get("epochs_max", base.epochs_max)),
            batch_size=int(d.get("batch_size", base.batch_size)),
            learning_rate=float(d.get("learning_rate", base.learning_rate)),
            patience=int(d.get("patience", base.patience)),
            seed=int(d.get("seed", base.seed)),
            augmentation=base.augmentation if aug is None else AugConfig.from_json_dict(aug),
        )


def _manifest_digest(manifest: DatasetManifest) -> str:
    h = hashlib.sha256()
    for e in manifest.entries:
        h.update(f"{e.path},{e.label.value},{e.split.value},{e.source}\n".encode())
    h.update(f"seed={manifest.seed}".encode())
    return h.hexdigest()


def model_version(kind: str, cfg: TrainConfig, manifest: DatasetManifest) -> str:
    """Content-derived run id: same inputs give the same version, and the
    same weights, so reruns are recognizably identical."""
    a = cfg.augmentation
    payload = "|".join(
        [
            kind,
            cfg.architecture,
            str(cfg.seed),
            _manifest_digest(manifest),
            f"{cfg.learning_rate:g}",
            str(cfg.batch_size),
            str(cfg.epochs_max),
            str(cfg.patience),
            f"{a.rotation_deg:g},{a.translate_frac:g},{a.scale_range[0]:g},"
            f"{a.scale_range[1]:g},{a.brightness_jitter:g},{a.enabled}",
        ]
    )
    return "m-" + hashlib.sha256(payload.encode()).hexdigest()[:12]


def _to_batch(pixels_u8: np.ndarray) -> torch.Tensor:
    x = torch.from_numpy(pixels_u8.astype(np.float32) / 255.0)
    return x.permute(0, 3, 1, 2)


def _augmented_batch(split: SplitArrays, idx: np.ndarray, cfg: AugConfig, seeds: np.ndarray) -> torch.Tensor:
    stacked = np.stack(
        [augment(split.mark(int(i)), cfg, int(s)).pixels for i, s in zip(idx, seeds)]
    )
    return torch.from_numpy(stacked).permute(0, 3, 1, 2)


def _eval_classifier(
    net: torch.nn.Module, pixels: np.ndarray, labels: np.ndarray, batch_size: int = 256
) -> tuple[float, float]:
    net.eval()
    total_loss, correct = 0.0, 0
    with torch.no_grad():
        for lo in range(0, len(labels), batch_size):
            x = _to_batch(pixels[lo : lo + batch_size])
            y = torch.from_numpy(labels[lo : lo + batch_size])
            z = net(x)
            total_loss += bce_from_logits(z, y).item() * len(y)
            correct += int(((z > 0).float() == y).sum().item())
    return total_loss / len(labels), correct / len(labels)


def train_classifier(
    manifest: DatasetManifest,
    cfg: TrainConfig,
    data: Optional[dict[Split, SplitArrays]] = None,
) -> tuple[ModelArtifact, TrainLog]:
    """Minimize BCE on the train split with early stopping on val loss;
    returns the best-val-loss epoch's weights."""
    spec = nets.get_spec(cfg.architecture)
    if not spec.trainable or spec.kind != "classifier":
        raise nets.UnknownArchitecture(
            f"{cfg.architecture!r} has no desk-scale classifier builder"
        )
    manifest.require_nonempty_splits()
    if data is None:
        data = load_aligned_dataset(manifest)
    train, val = data[Split.TRAIN], data[Split.VAL]

    torch.manual_seed(cfg.seed)
    net = nets.build(cfg.architecture)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)

    records: list[EpochRecord] = []
    val_losses: list[float] = []
    best_state = None
    stopped_early = False
    for epoch in range(1, cfg.epochs_max + 1):
        net.train()
        perm = rng.permutation(len(train))
        aug_seeds = rng.integers(0, 2**63, size=len(train))
        running, seen = 0.0, 0
        for lo in range(0, len(perm), cfg.batch_size):
            idx = perm[lo : lo + cfg.batch_size]
            if cfg.augmentation.enabled:
                x = _augmented_batch(train, idx, cfg.augmentation, aug_seeds[lo : lo + cfg.batch_size])
            else:
                x = _to_batch(train.pixels[idx])
            y = torch.from_numpy(train.labels[idx])
            opt.zero_grad()
            loss = bce_from_logits(net(x), y)
            if not math.isfinite(loss.item()):
                raise NonFiniteLoss(
                    f"train loss became {loss.item()} at epoch {epoch} "
                    f"(architecture={cfg.architecture}, lr={cfg.learning_rate})"
                )
            loss.backward()
            opt.step()
            running += loss.item() * len(idx)
            seen += len(idx)

        val_loss, val_acc = _eval_classifier(net, val.pixels, val.labels)
        if not math.isfinite(val_loss):
            raise NonFiniteLoss(f"val loss became {val_loss} at epoch {epoch}")
        records.append(
            EpochRecord(
                epoch=epoch,
                train_loss=running / seen,
                val_loss=val_loss,
                val_accuracy=val_acc,
            )
        )
        val_losses.append(val_loss)
        if best_epoch_of(val_losses) == epoch:
            best_state = copy.deepcopy(net.state_dict())
        if should_stop(val_losses, cfg.patience):
            stopped_early = True
            break

    net.load_state_dict(best_state)
    net.eval()
    log = TrainLog(
        epochs=tuple(records),
        stopped_early=stopped_early,
        best_epoch=best_epoch_of(val_losses),
    )
    meta = ModelMeta(
        architecture=cfg.architecture,
        layer_count=nets.layer_count(net),
        weight_count=nets.weight_count(net),
        version=model_version("clf", cfg, manifest),
        train_seed=cfg.seed,
    )
    return ModelArtifact.from_network(net, meta), log


# ---------------------------------------------------------------------------
# Pose-regressor aligner

# Normalization applied to (rotation_deg, log_scale, dx_px, dy_px) targets
# so each coordinate trains near unit range.
POSE_SCALE = (25.0, 0.35, 10.0, 10.0)


class TorchPoseRegressor:
    """Adapts a trained pose network to the aligner's predict_pose interface."""

    def __init__(self, net: torch.nn.Module):
        self._net = net.eval()

    def predict_pose(self, pixels: np.ndarray) -> tuple[float, float, float, float]:
        x = torch.from_numpy(np.ascontiguousarray(pixels, dtype=np.float32))
        with torch.no_grad():
            out = self._net(x.permute(2, 0, 1)[None])[0].numpy()
        return tuple(float(o * s) for o, s in zip(out, POSE_SCALE))


def pose_regressor_from_artifact(artifact: ModelArtifact) -> TorchPoseRegressor:
    return TorchPoseRegressor(artifact.build_network())


def sample_pose(rng: np.random.Generator, aug: AugConfig) -> AffineParams:
    """One known perturbation within the config's ranges."""
    rot = float(rng.uniform(-aug.rotation_deg, aug.rotation_deg))
    log_lo, log_hi = math.log(aug.scale_range[0]), math.log(aug.scale_range[1])
    scale = math.exp(float(rng.uniform(log_lo, log_hi)))
    t = aug.translate_frac * CANONICAL_SIZE
    tx, ty = float(rng.uniform(-t, t)), float(rng.uniform(-t, t))
    return AffineParams(rotation=rot, translation=(tx, ty), scale=scale)


def apply_pose(pixels_u8: np.ndarray, pose: AffineParams) -> np.ndarray:
    """Warp a canonical uint8 crop by a pose about the canonical center."""
    center = (CANONICAL_SIZE / 2.0, CANONICAL_SIZE / 2.0)
    img = pixels_u8.astype(np.float32) / 255.0
    out = cv2.warpAffine(
        img,
        pose.matrix(src_center=center, dst_center=center)[:2],
        (CANONICAL_SIZE, CANONICAL_SIZE),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_REPLICATE,
    )
    return np.clip(out, 0.0, 1.0)


def pose_target(pose: AffineParams) -> np.ndarray:
    raw = (pose.rotation, math.log(pose.scale), pose.translation[0], pose.translation[1])
    return np.array([v / s for v, s in zip(raw, POSE_SCALE)], dtype=np.float32)


def _shrink_pose(pose: AffineParams, factor: float) -> AffineParams:
    return AffineParams(
        rotation=pose.rotation * factor,
        translation=(pose.translation[0] * factor, pose.translation[1] * factor),
        scale=math.exp(math.log(pose.scale) * factor),
    )


def _pose_batch(
    pixels_u8: np.ndarray,
    idx: np.ndarray,
    aug: AugConfig,
    seeds: np.ndarray,
    near_identity_frac: float = 0.0,
) -> tuple[torch.Tensor, torch.Tensor]:
    xs = np.empty((len(idx), CANONICAL_SIZE, CANONICAL_SIZE, 3), dtype=np.float32)
    ys = np.empty((len(idx), 4), dtype=np.float32)
    for j, i in enumerate(idx):
        rng = np.random.default_rng(int(seeds[j]))
        pose = sample_pose(rng, aug)
        if near_identity_frac and rng.random() < near_identity_frac:
            # densify coverage near identity; the aligner must be most
            # precise where inputs are already nearly canonical
            pose = _shrink_pose(pose, float(rng.uniform(0.0, 0.2)))
        xs[j] = apply_pose(pixels_u8[i], pose)
        ys[j] = pose_target(pose)
    return torch.from_numpy(xs).permute(0, 3, 1, 2), torch.from_numpy(ys)


DEFAULT_POSE_AUG = AugConfig(
    rotation_deg=26.0,
    translate_frac=8.0 / CANONICAL_SIZE,
    scale_range=(0.76, 1.10),
    brightness_jitter=0.0,
)


def train_aligner(
    manifest: DatasetManifest,
    cfg: TrainConfig,
    data: Optional[dict[Split, SplitArrays]] = None,
) -> ModelArtifact:
    """Train the pose regressor on (known-perturbation, pose) pairs built
    from the corpus's aligned genuine and counterfeit marks."""
    spec = nets.get_spec(cfg.architecture)
    if not spec.trainable or spec.kind != "regressor":
        raise nets.UnknownArchitecture(
            f"{cfg.architecture!r} has no desk-scale regressor builder"
        )
    manifest.require_nonempty_splits()
    if data is None:
        data = load_aligned_dataset(manifest)
    train, val = data[Split.TRAIN], data[Split.VAL]
    aug = cfg.augmentation

    torch.manual_seed(cfg.seed)
    net = nets.build(cfg.architecture)
    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)

    # fixed held-out evaluation pairs
    val_seeds = rng.integers(0, 2**63, size=len(val))
    vx, vy = _pose_batch(val.pixels, np.arange(len(val)), aug, val_seeds)

    # late fine-tuning phase: a 10x lr drop tightens the near-identity fit
    lr_drop_epoch = max(2, (2 * cfg.epochs_max) // 3)

    val_losses: list[float] = []
    best_state = None
    for epoch in range(1, cfg.epochs_max + 1):
        net.train()
        if epoch == lr_drop_epoch:
            for group in opt.param_groups:
                group["lr"] = cfg.learning_rate * 0.1
        perm = rng.permutation(len(train))
        seeds = rng.integers(0, 2**63, size=len(train))
        for lo in range(0, len(perm), cfg.batch_size):
            idx = perm[lo : lo + cfg.batch_size]
            x, y = _pose_batch(
                train.pixels, idx, aug, seeds[lo : lo + cfg.batch_size], near_identity_frac=0.25
            )
            opt.zero_grad()
            loss = pose_loss(net(x), y)
            if not math.isfinite(loss.item()):
                raise NonFiniteLoss(f"pose loss became {loss.item()} at epoch {epoch}")
            loss.backward()
            opt.step()

        net.eval()
        with torch.no_grad():
            vl = pose_loss(net(vx), vy).item()
        if not math.isfinite(vl):
            raise NonFiniteLoss(f"pose val loss became {vl} at epoch {epoch}")
        val_losses.append(vl)
        if best_epoch_of(val_losses) == epoch:
            best_state = copy.deepcopy(net.state_dict())
        if should_stop(val_losses, cfg.patience):
            break

    net.load_state_dict(best_state)
    net.eval()
    meta = ModelMeta(
        architecture=cfg.architecture,
        layer_count=nets.layer_count(net),
        weight_count=nets.weight_count(net),
        version=model_version("pose", cfg, manifest),
        train_seed=cfg.seed,
    )
    return ModelArtifact.from_network(net, meta)
