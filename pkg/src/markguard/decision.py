"""Verdicts, rejection bands, cost-matrix calibration, and evaluation reports.

The decision rule is a half-open band: scores strictly above ``upper`` are
GENUINE, scores at or below ``lower`` are COUNTERFEIT, anything in between is
REJECTed as ambiguous.  A degenerate band (``lower == upper == t``) is exactly
the plain single-threshold rule "GENUINE iff score > t" and can never reject.

Calibration enumerates candidate thresholds at the midpoints between
consecutive distinct scores (plus the endpoints 0 and 1), which is exact for
empirical score distributions.  Tie-breaking among equal-cost bands is done in
rank space (fewest rejections, then fewest distinct score values inside the
band, then lowest lower-candidate index) so that the chosen per-item verdict
assignment is invariant under any strictly increasing re-mapping of the scores.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

REASON_AMBIGUOUS = "ambiguous score"
REASON_NO_MARK = "no mark"
REASON_DEGENERATE_CROP = "degenerate crop"


class EmptySet(ValueError):
    """An operation that needs a non-empty ScoredSet received an empty one."""


class InvalidCostMatrix(ValueError):
    """Cost matrix violates its invariants (e.g. non-positive rejection cost)."""


class RejectAllDominantWarning(UserWarning):
    """Calibration found that rejecting every item is optimal (degenerate costs)."""


class Truth(str, Enum):
    GENUINE = "genuine"
    COUNTERFEIT = "counterfeit"


class VerdictLabel(str, Enum):
    GENUINE = "GENUINE"
    COUNTERFEIT = "COUNTERFEIT"
    REJECT = "REJECT"


@dataclass(frozen=True)
class Verdict:
    label: VerdictLabel
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.label is VerdictLabel.REJECT and not self.reason:
            raise ValueError("REJECT verdicts must carry a reason code")
        if self.label is not VerdictLabel.REJECT and self.reason is not None:
            raise ValueError("only REJECT verdicts carry a reason")


@dataclass(frozen=True)
class ThresholdBand:
    lower: float
    upper: float
    version: str = "unversioned"

    def __post_init__(self) -> None:
        if not (0.0 <= self.lower <= self.upper <= 1.0):
            raise ValueError(f"need 0 <= lower <= upper <= 1, got {self}")


@dataclass(frozen=True)
class CostMatrix:
    """Per-outcome costs: counterfeit passed as genuine, genuine flagged, rejection."""

    cost_false_genuine: float
    cost_false_counterfeit: float
    cost_reject: float

    def __post_init__(self) -> None:
        if self.cost_false_genuine < 0 or self.cost_false_counterfeit < 0:
            raise InvalidCostMatrix(f"error costs must be >= 0, got {self}")
        if not self.cost_reject > 0:
            raise InvalidCostMatrix(
                "cost_reject must be > 0 (a free reject makes rejecting everything optimal)"
            )


@dataclass(frozen=True)
class ScoredSet:
    """Scores with ground truth, the input to calibration and evaluation."""

    items: tuple[tuple[float, Truth], ...]

    def __post_init__(self) -> None:
        for score, truth in self.items:
            if not (0.0 <= score <= 1.0):
                raise ValueError(f"score out of range: {score}")
            if not isinstance(truth, Truth):
                raise TypeError(f"truth must be a Truth label, got {truth!r}")

    @classmethod
    def of(cls, pairs: Iterable[tuple[float, Truth | str]]) -> "ScoredSet":
        return cls(tuple((float(s), Truth(t)) for s, t in pairs))

    def __len__(self) -> int:
        return len(self.items)

    def scores(self) -> np.ndarray:
        return np.array([s for s, _ in self.items], dtype=float)

    def genuine_mask(self) -> np.ndarray:
        return np.array([t is Truth.GENUINE for _, t in self.items], dtype=bool)

    def to_csv(self, path: str | Path) -> None:
        lines = [f"{score!r},{truth.value}" for score, truth in self.items]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | Path) -> "ScoredSet":
        pairs = []
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            score_text, label_text = line.split(",")
            pairs.append((float(score_text), Truth(label_text.strip())))
        return cls.of(pairs)


def decide(score: float, band: ThresholdBand) -> Verdict:
    """Three-way decision: GENUINE above the band, COUNTERFEIT at/below, REJECT inside."""
    if score > band.upper:
        return Verdict(VerdictLabel.GENUINE)
    if score <= band.lower:
        return Verdict(VerdictLabel.COUNTERFEIT)
    return Verdict(VerdictLabel.REJECT, reason=REASON_AMBIGUOUS)


def _item_cost(score: float, truth: Truth, band: ThresholdBand, costs: CostMatrix) -> float:
    verdict = decide(score, band)
    if verdict.label is VerdictLabel.REJECT:
        return costs.cost_reject
    if verdict.label is VerdictLabel.GENUINE and truth is Truth.COUNTERFEIT:
        return costs.cost_false_genuine
    if verdict.label is VerdictLabel.COUNTERFEIT and truth is Truth.GENUINE:
        return costs.cost_false_counterfeit
    return 0.0


def expected_cost(scored: ScoredSet, band: ThresholdBand, costs: CostMatrix) -> float:
    """Mean per-item cost of applying ``band`` to the set."""
    if len(scored) == 0:
        raise EmptySet("expected_cost needs a non-empty ScoredSet")
    total = sum(_item_cost(s, t, band, costs) for s, t in scored.items)
    return total / len(scored)


def candidate_thresholds(scores: np.ndarray) -> np.ndarray:
    """Endpoints plus midpoints between consecutive distinct sorted scores."""
    uniq = np.unique(np.asarray(scores, dtype=float))
    mids = (uniq[:-1] + uniq[1:]) / 2.0
    return np.unique(np.concatenate(([0.0], mids, [1.0])))


@dataclass(frozen=True)
class _BandGrid:
    """Prefix-sum tallies over the candidate grid, shared by calibration and curves."""

    candidates: np.ndarray  # (k,)
    n_le: np.ndarray  # items with score <= candidate
    gen_le: np.ndarray  # genuine items with score <= candidate
    cf_gt: np.ndarray  # counterfeit items with score > candidate
    n_items: int

    @classmethod
    def build(cls, scored: ScoredSet) -> "_BandGrid":
        scores = scored.scores()
        genuine = scored.genuine_mask()
        cands = candidate_thresholds(scores)
        le = scores[None, :] <= cands[:, None]  # (k, n)
        n_le = le.sum(axis=1)
        gen_le = (le & genuine[None, :]).sum(axis=1)
        cf_le = (le & ~genuine[None, :]).sum(axis=1)
        cf_gt = int((~genuine).sum()) - cf_le
        return cls(cands, n_le, gen_le, cf_gt, len(scored))

    def rejected(self) -> np.ndarray:
        """(k, k) count of items in (lower_i, upper_j]; valid where i <= j."""
        return self.n_le[None, :] - self.n_le[:, None]

    def errors_and_correct(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """False-genuine counts per upper, false-counterfeit per lower, correct (k,k)."""
        fg = self.cf_gt  # counterfeit scored above upper -> passed as genuine
        fc = self.gen_le  # genuine scored at/below lower -> flagged counterfeit
        gen_gt = (int(self.n_items) - self.n_le) - self.cf_gt  # genuine above threshold
        cf_le = self.n_le - self.gen_le
        correct = gen_gt[None, :] + cf_le[:, None]  # correct accepted for pair (i, j)
        return fg, fc, correct


def _tie_key(rejected: int, span: int, lower_idx: int) -> tuple[int, int, int]:
    return (rejected, span, lower_idx)


def calibrate_band(
    scored: ScoredSet, costs: CostMatrix, *, version: str | None = None
) -> ThresholdBand:
    """Band minimizing expected cost over all candidate threshold pairs.

    Ties are broken by fewest rejections, then narrowest band in rank space,
    then lowest lower threshold.  Emits :class:`RejectAllDominantWarning` when
    the optimum rejects every item.
    """
    if len(scored) == 0:
        raise EmptySet("calibrate_band needs a non-empty ScoredSet")
    grid = _BandGrid.build(scored)
    k = len(grid.candidates)
    rejected = grid.rejected()
    fg, fc, _ = grid.errors_and_correct()
    cost = (
        costs.cost_false_genuine * fg[None, :]
        + costs.cost_false_counterfeit * fc[:, None]
        + costs.cost_reject * rejected
    ) / grid.n_items
    ii, jj = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    valid = ii <= jj
    cost = np.where(valid, cost, np.inf)

    best_cost = float(cost.min())
    tol = 1e-12 * max(1.0, abs(best_cost))
    near = np.argwhere(cost <= best_cost + tol)
    best = min(near, key=lambda idx: _tie_key(int(rejected[idx[0], idx[1]]), int(idx[1] - idx[0]), int(idx[0])))
    i, j = int(best[0]), int(best[1])

    if int(rejected[i, j]) == grid.n_items:
        warnings.warn(
            "optimal band rejects every item; check the cost configuration",
            RejectAllDominantWarning,
            stacklevel=2,
        )
    if version is None:
        version = _calibration_version(scored, costs)
    return ThresholdBand(float(grid.candidates[i]), float(grid.candidates[j]), version)


def _calibration_version(scored: ScoredSet, costs: CostMatrix) -> str:
    payload = json.dumps(
        {
            "items": [(s, t.value) for s, t in scored.items],
            "costs": [costs.cost_false_genuine, costs.cost_false_counterfeit, costs.cost_reject],
        },
        separators=(",", ":"),
    ).encode()
    return "cal-" + hashlib.sha256(payload).hexdigest()[:12]


@dataclass(frozen=True)
class CurvePoint:
    rejection_budget: float
    best_accuracy: float
    band: ThresholdBand
    achieved_rejection: float


@dataclass(frozen=True)
class TradeoffCurve:
    points: tuple[CurvePoint, ...]

    def to_json_dict(self) -> dict:
        return {
            "points": [
                {
                    "rejection_budget": p.rejection_budget,
                    "best_accuracy": p.best_accuracy,
                    "band": {"lower": p.band.lower, "upper": p.band.upper, "version": p.band.version},
                    "achieved_rejection": p.achieved_rejection,
                }
                for p in self.points
            ]
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "TradeoffCurve":
        points = tuple(
            CurvePoint(
                rejection_budget=float(p["rejection_budget"]),
                best_accuracy=float(p["best_accuracy"]),
                band=ThresholdBand(
                    float(p["band"]["lower"]), float(p["band"]["upper"]), str(p["band"]["version"])
                ),
                achieved_rejection=float(p["achieved_rejection"]),
            )
            for p in data["points"]
        )
        return cls(points)

    def to_table(self) -> str:
        """Two-column rejection/accuracy table for plotting."""
        lines = ["rejection\taccuracy"]
        lines += [f"{p.achieved_rejection!r}\t{p.best_accuracy!r}" for p in self.points]
        return "\n".join(lines) + "\n"


def format_curve_point(rejection: float, accuracy: float) -> str:
    return f"{accuracy * 100:.2f}% @ {rejection * 100:.2f}% rejection"


# standard budget grid for reports and the threshold-tuning view: 0% to 50% in 2% steps
DEFAULT_REJECTION_BUDGETS = tuple(round(0.02 * i, 2) for i in range(26))


def tradeoff_curve(scored: ScoredSet, budgets: Sequence[float]) -> TradeoffCurve:
    """Best accuracy over accepted items under each rejection budget.

    For budget r, searches all candidate bands whose empirical rejection rate
    is <= r and keeps the accuracy-maximizing one (ties: fewest rejections,
    then rank-space narrowest, then lowest lower).
    """
    if len(scored) == 0:
        raise EmptySet("tradeoff_curve needs a non-empty ScoredSet")
    budgets = [float(b) for b in budgets]
    if any(not (0.0 <= b < 1.0) for b in budgets):
        raise ValueError(f"budgets must lie in [0, 1), got {budgets}")
    if sorted(budgets) != budgets:
        raise ValueError("budgets must be sorted ascending")

    grid = _BandGrid.build(scored)
    k = len(grid.candidates)
    n = grid.n_items
    rejected = grid.rejected()
    _, _, correct = grid.errors_and_correct()
    ii, jj = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    valid = ii <= jj

    points = []
    for budget in budgets:
        feasible = valid & (rejected <= budget * n)
        accepted = n - rejected
        with np.errstate(invalid="ignore", divide="ignore"):
            acc = np.where(feasible & (accepted > 0), correct / accepted, -1.0)
        best_acc = float(acc.max())
        if best_acc < 0:
            raise EmptySet(f"no feasible band at budget {budget}")
        # exact integer cross-comparison among float near-ties
        near = np.argwhere(acc >= best_acc - 1e-9)
        best_pair = None
        for idx in near:
            i, j = int(idx[0]), int(idx[1])
            c, a = int(correct[i, j]), int(accepted[i, j])
            if best_pair is None:
                best_pair = (i, j, c, a)
                continue
            bi, bj, bc, ba = best_pair
            if c * ba != bc * a:
                if c * ba > bc * a:
                    best_pair = (i, j, c, a)
                continue
            if _tie_key(int(rejected[i, j]), j - i, i) < _tie_key(int(rejected[bi, bj]), bj - bi, bi):
                best_pair = (i, j, c, a)
        i, j, c, a = best_pair
        band = ThresholdBand(float(grid.candidates[i]), float(grid.candidates[j]), f"budget-{budget!r}")
        points.append(
            CurvePoint(
                rejection_budget=budget,
                best_accuracy=c / a,
                band=band,
                achieved_rejection=int(rejected[i, j]) / n,
            )
        )
    return TradeoffCurve(tuple(points))


@dataclass(frozen=True)
class Confusion:
    tp: int
    tn: int
    fp: int
    fn: int
    rejected: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn + self.rejected


@dataclass(frozen=True)
class EvalReport:
    """One Table-style row: architecture metadata plus band performance counts."""

    architecture: str
    layer_count: int
    weight_count: int
    rejection_rate: float
    accuracy: float | None  # None marks "undefined" (everything rejected)
    confusion: Confusion
    error: str | None = None  # set on failed experiment-matrix rows

    def to_json_dict(self) -> dict:
        out = {
            "architecture": self.architecture,
            "layer_count": self.layer_count,
            "weight_count": self.weight_count,
            "rejection_rate": self.rejection_rate,
            "accuracy": self.accuracy,
            "confusion": {
                "tp": self.confusion.tp,
                "tn": self.confusion.tn,
                "fp": self.confusion.fp,
                "fn": self.confusion.fn,
                "rejected": self.confusion.rejected,
            },
        }
        if self.error is not None:
            out["error"] = self.error
        return out

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "EvalReport":
        conf = data["confusion"]
        return cls(
            architecture=str(data["architecture"]),
            layer_count=int(data["layer_count"]),
            weight_count=int(data["weight_count"]),
            rejection_rate=float(data["rejection_rate"]),
            accuracy=None if data["accuracy"] is None else float(data["accuracy"]),
            confusion=Confusion(
                int(conf["tp"]), int(conf["tn"]), int(conf["fp"]), int(conf["fn"]), int(conf["rejected"])
            ),
            error=data.get("error"),
        )


def evaluate(scored: ScoredSet, band: ThresholdBand, model_meta: Mapping) -> EvalReport:
    """Confusion counts and accuracy over non-rejected items for one band."""
    if len(scored) == 0:
        raise EmptySet("evaluate needs a non-empty ScoredSet")
    tp = tn = fp = fn = rejected = 0
    for score, truth in scored.items:
        verdict = decide(score, band)
        if verdict.label is VerdictLabel.REJECT:
            rejected += 1
        elif verdict.label is VerdictLabel.GENUINE:
            if truth is Truth.GENUINE:
                tp += 1
            else:
                fp += 1
        else:
            if truth is Truth.COUNTERFEIT:
                tn += 1
            else:
                fn += 1
    accepted = tp + tn + fp + fn
    return EvalReport(
        architecture=str(model_meta.get("architecture", "unknown")),
        layer_count=int(model_meta.get("layer_count", 0)),
        weight_count=int(model_meta.get("weight_count", 0)),
        rejection_rate=rejected / len(scored),
        accuracy=(tp + tn) / accepted if accepted > 0 else None,
        confusion=Confusion(tp, tn, fp, fn, rejected),
    )


def format_weight_count(n: int) -> str:
    """Render weight counts the way comparison tables do: 89000000 -> "89M"."""
    if n and n % 1_000_000 == 0:
        return f"{n // 1_000_000}M"
    return str(n)


def parse_weight_count(text: str) -> int:
    text = text.strip()
    if text.endswith("M"):
        return int(text[:-1]) * 1_000_000
    return int(text)


def reports_to_json(reports: Sequence[EvalReport]) -> str:
    return json.dumps([r.to_json_dict() for r in reports], indent=2) + "\n"


def reports_from_json(text: str) -> list[EvalReport]:
    return [EvalReport.from_json_dict(d) for d in json.loads(text)]


def render_report_table(reports: Sequence[EvalReport]) -> str:
    """Human-readable comparison table (architecture, layers, weights, rejection, accuracy)."""
    header = ["architecture", "layers", "weights", "rejection", "accuracy"]
    rows = [header]
    for r in reports:
        acc = "undefined" if r.accuracy is None else f"{r.accuracy * 100:.2f}%"
        if r.error is not None:
            acc = f"FAILED: {r.error}"
        rows.append(
            [
                r.architecture,
                str(r.layer_count),
                format_weight_count(r.weight_count),
                f"{r.rejection_rate * 100:.2f}%",
                acc,
            ]
        )
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"
