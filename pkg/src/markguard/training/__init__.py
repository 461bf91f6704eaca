"""Classifier and aligner training: manifests, nets, loops, experiment matrix."""

from markguard.training.artifact import (
    SCORE_ORIENTATION,
    EpochRecord,
    ModelArtifact,
    ModelMeta,
    TrainLog,
)
from markguard.training.data import AugConfig, SplitArrays, augment, load_aligned_dataset
from markguard.training.early_stopping import best_epoch, should_stop, stopping_epoch
from markguard.training.losses import bce_from_logits, pose_loss
from markguard.training.manifest import (
    DEFAULT_SPLIT_FRACTIONS,
    DatasetManifest,
    EmptySplit,
    ManifestEntry,
    Split,
    assign_splits,
    split_counts,
)
from markguard.training.matrix import run_experiment_matrix, score_split
from markguard.training.nets import (
    ArchSpec,
    UnknownArchitecture,
    build,
    get_spec,
    layer_count,
    registered,
    weight_count,
)
from markguard.training.train import (
    DEFAULT_POSE_AUG,
    POSE_SCALE,
    NonFiniteLoss,
    TorchPoseRegressor,
    TrainConfig,
    model_version,
    pose_regressor_from_artifact,
    train_aligner,
    train_classifier,
)

__all__ = [
    "DEFAULT_POSE_AUG",
    "DEFAULT_SPLIT_FRACTIONS",
    "POSE_SCALE",
    "SCORE_ORIENTATION",
    "ArchSpec",
    "AugConfig",
    "DatasetManifest",
    "EmptySplit",
    "EpochRecord",
    "ManifestEntry",
    "ModelArtifact",
    "ModelMeta",
    "NonFiniteLoss",
    "Split",
    "SplitArrays",
    "TorchPoseRegressor",
    "TrainConfig",
    "TrainLog",
    "UnknownArchitecture",
    "assign_splits",
    "augment",
    "bce_from_logits",
    "best_epoch",
    "build",
    "get_spec",
    "layer_count",
    "load_aligned_dataset",
    "model_version",
    "pose_loss",
    "pose_regressor_from_artifact",
    "registered",
    "run_experiment_matrix",
    "score_split",
    "should_stop",
    "split_counts",
    "stopping_epoch",
    "train_aligner",
    "train_classifier",
    "weight_count",
]
