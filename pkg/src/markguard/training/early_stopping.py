"""Early stopping as a pure function of the validation-loss history.

Epochs are 1-indexed.  An epoch improves iff its loss is strictly below the
best seen so far; training stops once `patience` consecutive epochs fail to
improve, so the stopping epoch is always best_epoch + patience.
"""

from __future__ import annotations

from typing import Sequence


def best_epoch(val_losses: Sequence[float]) -> int:
    """1-indexed epoch of the lowest loss (first occurrence on ties)."""
    if not val_losses:
        raise ValueError("empty loss history")
    best = min(range(len(val_losses)), key=lambda i: (val_losses[i], i))
    return best + 1


def should_stop(val_losses: Sequence[float], patience: int) -> bool:
    """True once the last `patience` epochs all failed to improve."""
    if patience < 1:
        raise ValueError("patience must be >= 1")
    if not val_losses:
        return False
    return len(val_losses) - best_epoch(val_losses) >= patience


def stopping_epoch(val_losses: Sequence[float], patience: int) -> tuple[int, int, bool]:
    """Simulate epoch-by-epoch stopping over a full loss sequence.

    Returns (last_epoch_run, best_epoch, stopped_early) as a training loop
    honoring `should_stop` after each epoch would produce.
    """
    for epoch in range(1, len(val_losses) + 1):
        if should_stop(val_losses[:epoch], patience):
            return epoch, best_epoch(val_losses[:epoch]), True
    return len(val_losses), best_epoch(val_losses), False
