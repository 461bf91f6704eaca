"""Dataset manifests: path/label/split bookkeeping for training runs."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from markguard.decision import Truth

# Split ratio of the reference corpus (20,945 / 8,747 / 1,702 images).
REFERENCE_SPLIT_COUNTS = (20_945, 8_747, 1_702)
_REF_TOTAL = sum(REFERENCE_SPLIT_COUNTS)
DEFAULT_SPLIT_FRACTIONS = tuple(c / _REF_TOTAL for c in REFERENCE_SPLIT_COUNTS)

MANIFEST_HEADER = ("path", "label", "split", "source")


class Split(enum.Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


class EmptySplit(ValueError):
    """A split required for training has no entries."""


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: Truth
    split: Split
    source: str = "synthetic"


@dataclass(frozen=True)
class DatasetManifest:
    """Immutable list of dataset entries plus the generation seed.

    ``base_dir`` locates relative entry paths; it is set on load and never
    serialized or compared.
    """

    entries: tuple[ManifestEntry, ...]
    seed: int = 0
    base_dir: str = field(default="", compare=False)

    def __post_init__(self):
        seen: dict[str, Split] = {}
        for e in self.entries:
            prior = seen.get(e.path)
            if prior is not None and prior is not e.split:
                raise ValueError(f"path appears in two splits: {e.path}")
            seen[e.path] = e.split

    def split(self, which: Split) -> tuple[ManifestEntry, ...]:
        return tuple(e for e in self.entries if e.split is which)

    def counts(self) -> dict[str, int]:
        return {s.value: len(self.split(s)) for s in Split}

    def resolve(self, entry: ManifestEntry) -> Path:
        p = Path(entry.path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def require_nonempty_splits(self) -> None:
        for s in Split:
            if not self.split(s):
                raise EmptySplit(f"split '{s.value}' is empty")

    def to_csv(self, path) -> None:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(MANIFEST_HEADER)
            for e in self.entries:
                writer.writerow([e.path, e.label.value, e.split.value, e.source])
            fh.write(f"# seed={self.seed}\n")

    @classmethod
    def from_csv(cls, path) -> "DatasetManifest":
        path = Path(path)
        entries = []
        seed = 0
        with open(path, newline="") as fh:
            first = fh.readline().strip()
            if tuple(first.split(",")) != MANIFEST_HEADER:
                raise ValueError(f"bad manifest header: {first!r}")
            for row in csv.reader(fh):
                if not row:
                    continue
                if row[0].startswith("# seed="):
                    seed = int(row[0].split("=", 1)[1])
                    continue
                p, label, split, source = row
                entries.append(ManifestEntry(p, Truth(label), Split(split), source))
        return cls(entries=tuple(entries), seed=seed, base_dir=str(path.parent))


def split_counts(n: int, fractions: Sequence[float] = DEFAULT_SPLIT_FRACTIONS) -> tuple[int, int, int]:
    """Largest-remainder rounding of n items into train/val/test."""
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must be three non-negative values summing to 1")
    raw = [n * f for f in fractions]
    base = [int(x) for x in raw]
    short = n - sum(base)
    order = sorted(range(3), key=lambda i: raw[i] - base[i], reverse=True)
    for i in order[:short]:
        base[i] += 1
    return tuple(base)


def assign_splits(n: int, fractions: Sequence[float] = DEFAULT_SPLIT_FRACTIONS) -> list[Split]:
    """Deterministic per-index split labels: train block, then val, then test."""
    n_train, n_val, n_test = split_counts(n, fractions)
    return [Split.TRAIN] * n_train + [Split.VAL] * n_val + [Split.TEST] * n_test


def merge_manifests(parts: Iterable[DatasetManifest], seed: int = 0) -> DatasetManifest:
    entries: list[ManifestEntry] = []
    base = ""
    for m in parts:
        entries.extend(m.entries)
        base = base or m.base_dir
    return DatasetManifest(entries=tuple(entries), seed=seed, base_dir=base)
