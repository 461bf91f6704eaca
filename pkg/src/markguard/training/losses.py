"""Loss functions for classifier and aligner training."""

from __future__ import annotations

import torch
import torch.nn.functional as F


def bce_from_logits(logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Binary cross-entropy on raw logits, mean over the batch.

    Written as softplus(z) - z*y, which is the numerically stable form and
    gives exactly ln(2) for z = 0 regardless of the label.
    """
    if logits.shape != targets.shape:
        raise ValueError(f"shape mismatch: {tuple(logits.shape)} vs {tuple(targets.shape)}")
    return (F.softplus(logits) - logits * targets).mean()


def pose_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean squared error over normalized pose components."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(target.shape)}")
    return ((pred - target) ** 2).mean()
