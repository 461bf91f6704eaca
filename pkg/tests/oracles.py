"""Brute-force oracles kept deliberately independent of the library internals.

Each oracle re-derives its answer item by item with plain Python loops so the
vectorized implementations in ``markguard.decision`` are checked against a
second, slower route.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from markguard.decision import (
    CostMatrix,
    ScoredSet,
    ThresholdBand,
    Truth,
)


def item_verdict(score: float, lower: float, upper: float) -> str:
    if score > upper:
        return "GENUINE"
    if score <= lower:
        return "COUNTERFEIT"
    return "REJECT"


def brute_expected_cost(scored: ScoredSet, band: ThresholdBand, costs: CostMatrix) -> float:
    total = 0.0
    for score, truth in scored.items:
        verdict = item_verdict(score, band.lower, band.upper)
        if verdict == "REJECT":
            total += costs.cost_reject
        elif verdict == "GENUINE" and truth is Truth.COUNTERFEIT:
            total += costs.cost_false_genuine
        elif verdict == "COUNTERFEIT" and truth is Truth.GENUINE:
            total += costs.cost_false_counterfeit
    return total / len(scored.items)


def brute_candidates(scored: ScoredSet) -> list[float]:
    uniq = sorted({s for s, _ in scored.items})
    cands = {0.0, 1.0}
    for a, b in zip(uniq[:-1], uniq[1:]):
        cands.add((a + b) / 2.0)
    return sorted(cands)


def brute_calibrate(scored: ScoredSet, costs: CostMatrix) -> tuple[float, float, float]:
    """Exhaustive search over candidate pairs; returns (lower, upper, cost)."""
    cands = brute_candidates(scored)
    best = None
    for i, lower in enumerate(cands):
        for j in range(i, len(cands)):
            upper = cands[j]
            band = ThresholdBand(lower, upper)
            cost = brute_expected_cost(scored, band, costs)
            rejected = sum(
                1 for s, _ in scored.items if item_verdict(s, lower, upper) == "REJECT"
            )
            key = (cost, rejected, j - i, i)
            if best is None or key < best[0]:
                best = (key, lower, upper)
    _, lower, upper = best
    return lower, upper, best[0][0]


def brute_curve_point(scored: ScoredSet, budget: float) -> tuple[Fraction, float, float]:
    """Best exact accuracy under the rejection budget; returns (accuracy, lower, upper)."""
    cands = brute_candidates(scored)
    n = len(scored.items)
    best = None
    for i, lower in enumerate(cands):
        for j in range(i, len(cands)):
            upper = cands[j]
            verdicts = [item_verdict(s, lower, upper) for s, _ in scored.items]
            rejected = sum(1 for v in verdicts if v == "REJECT")
            if rejected > budget * n or rejected == n:
                continue
            correct = sum(
                1
                for (s, t), v in zip(scored.items, verdicts)
                if (v == "GENUINE" and t is Truth.GENUINE)
                or (v == "COUNTERFEIT" and t is Truth.COUNTERFEIT)
            )
            acc = Fraction(correct, n - rejected)
            key = (-acc, rejected, j - i, i)
            if best is None or key < best[0]:
                best = (key, acc, lower, upper)
    _, acc, lower, upper = best
    return acc, lower, upper


def brute_confusion(scored: ScoredSet, band: ThresholdBand) -> dict[str, int]:
    counts = {"tp": 0, "tn": 0, "fp": 0, "fn": 0, "rejected": 0}
    for score, truth in scored.items:
        verdict = item_verdict(score, band.lower, band.upper)
        if verdict == "REJECT":
            counts["rejected"] += 1
        elif verdict == "GENUINE":
            counts["tp" if truth is Truth.GENUINE else "fp"] += 1
        else:
            counts["tn" if truth is Truth.COUNTERFEIT else "fn"] += 1
    return counts


def brute_search(
    scored: ScoredSet, costs: CostMatrix, budgets: Sequence[float]
) -> tuple[tuple[float, float, float], list[tuple[Fraction, float, float]]]:
    """One exhaustive pass over all candidate band pairs, serving both the
    calibration search and every curve budget at once.

    Returns ((lower, upper, expected_cost), [(accuracy, lower, upper) per
    budget]).  Tie-breaks mirror the documented rules: fewest rejections,
    then narrowest band, then lowest lower bound.
    """
    cands = brute_candidates(scored)
    n = len(scored.items)
    stats = []
    for i, lower in enumerate(cands):
        for j in range(i, len(cands)):
            upper = cands[j]
            rejected = 0
            correct = 0
            total = 0.0
            for s, t in scored.items:
                v = item_verdict(s, lower, upper)
                if v == "REJECT":
                    rejected += 1
                    total += costs.cost_reject
                elif v == "GENUINE":
                    if t is Truth.GENUINE:
                        correct += 1
                    else:
                        total += costs.cost_false_genuine
                else:
                    if t is Truth.COUNTERFEIT:
                        correct += 1
                    else:
                        total += costs.cost_false_counterfeit
            stats.append((rejected, correct, total / n, j - i, i, lower, upper))

    best = min(stats, key=lambda r: (r[2], r[0], r[3], r[4]))
    calibrated = (best[5], best[6], best[2])

    curve = []
    for budget in budgets:
        top = None
        for rejected, correct, _cost, span, i, lower, upper in stats:
            if rejected > budget * n or rejected == n:
                continue
            key = (-Fraction(correct, n - rejected), rejected, span, i)
            if top is None or key < top[0]:
                top = (key, lower, upper)
        curve.append((-top[0][0], top[1], top[2]))
    return calibrated, curve
