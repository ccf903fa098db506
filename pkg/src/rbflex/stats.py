"""Rank statistics: Pearson's r, tie-corrected Kendall's tau, top-k extraction.

Kendall's tau_b ships in two forms that must agree exactly: a definitional
O(n^2) pair enumeration and an O(n log n) merge-sort (inversion counting)
version. Both accumulate integer counts and perform the same final float
division, so agreement is bitwise, not approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AllDegenerate, AllTied, ConstantSeries
from .scoring import ScoreRecord, is_degenerate

__all__ = [
    "PairedSeries",
    "kendall_tau_b",
    "kendall_tau_b_brute",
    "pearson",
    "top_k",
]


@dataclass
class PairedSeries:
    """Scores x paired with reference values y, joined on ids."""

    ids: list[str]
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if len(self.ids) != self.x.shape[0] or self.x.shape[0] != self.y.shape[0]:
            raise ValueError("ids, x and y must have equal length")
        if self.x.shape[0] < 2:
            raise ValueError("need at least 2 points")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise ValueError("series must be finite (drop sentinels before building)")


def _series_xy(series) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(series, PairedSeries):
        return series.x, series.y
    x, y = series
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.shape[0] < 2:
        raise ValueError("need two equal-length 1-D series with n >= 2")
    return x, y


def pearson(series) -> float:
    """Product-moment correlation in 64-bit arithmetic."""
    x, y = _series_xy(series)
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float((dx * dx).sum())
    sy = float((dy * dy).sum())
    if sx == 0.0 or sy == 0.0:
        raise ConstantSeries("correlation undefined for a constant series")
    return float((dx * dy).sum()) / math.sqrt(sx * sy)


# --------------------------------------------------------------------------
# Kendall's tau_b
# --------------------------------------------------------------------------

def _tau_from_counts(numerator: int, pairs_x: int, pairs_y: int) -> float:
    if pairs_x == 0 or pairs_y == 0:
        raise AllTied("tau undefined: one side ties every pair")
    return numerator / math.sqrt(pairs_x * pairs_y)


def kendall_tau_b_brute(series) -> float:
    """O(n^2) definitional tau_b: enumerate every pair and classify it."""
    x, y = _series_xy(series)
    n = x.shape[0]
    concordant = discordant = ties_x_only = ties_y_only = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0.0 and dy == 0.0:
                continue
            if dx == 0.0:
                ties_x_only += 1
            elif dy == 0.0:
                ties_y_only += 1
            elif (dx > 0.0) == (dy > 0.0):
                concordant += 1
            else:
                discordant += 1
    return _tau_from_counts(concordant - discordant,
                            concordant + discordant + ties_x_only,
                            concordant + discordant + ties_y_only)


def _tied_pair_count(values: np.ndarray) -> int:
    total = 0
    run = 1
    for i in range(1, len(values)):
        if values[i] == values[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


def _merge_count(seq: list[float]) -> int:
    """Count strict inversions (seq[i] > seq[j] for i < j) by merge sort."""
    n = len(seq)
    if n < 2:
        return 0
    mid = n // 2
    left = seq[:mid]
    right = seq[mid:]
    inv = _merge_count(left) + _merge_count(right)
    i = j = k = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            seq[k] = left[i]
            i += 1
        else:
            seq[k] = right[j]
            j += 1
            inv += len(left) - i
        k += 1
    while i < len(left):
        seq[k] = left[i]
        i += 1
        k += 1
    while j < len(right):
        seq[k] = right[j]
        j += 1
        k += 1
    return inv


def kendall_tau_b(series) -> float:
    """O(n log n) tau_b via sort + inversion counting; exact per-pair counts.

    Sort by (x, y); ties in x, y and (x, y) are counted from runs; discordant
    pairs are the strict inversions of the y sequence.
    """
    x, y = _series_xy(series)
    n = x.shape[0]
    order = np.lexsort((y, x))
    xs = x[order]
    ys = y[order]

    n0 = n * (n - 1) // 2
    ties_x = _tied_pair_count(xs)
    ties_y = _tied_pair_count(np.sort(y))
    # joint ties: runs of equal (x, y) in the lexicographic order
    ties_xy = 0
    run = 1
    for i in range(1, n):
        if xs[i] == xs[i - 1] and ys[i] == ys[i - 1]:
            run += 1
        else:
            ties_xy += run * (run - 1) // 2
            run = 1
    ties_xy += run * (run - 1) // 2

    discordant = _merge_count(list(ys))
    concordant = n0 - ties_x - ties_y + ties_xy - discordant
    return _tau_from_counts(concordant - discordant, n0 - ties_x, n0 - ties_y)


# --------------------------------------------------------------------------
# ranking
# --------------------------------------------------------------------------

def top_k(records: Sequence[ScoreRecord], k: int) -> list[str]:
    """Top-k spec_ids: descending score, sentinels last, ties by ascending id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not records:
        raise ValueError("no records to rank")
    if all(is_degenerate(r.score) for r in records):
        raise AllDegenerate("every candidate scored degenerate")
    ranked = sorted(records,
                    key=lambda r: (is_degenerate(r.score),
                                   -r.score if not is_degenerate(r.score) else 0.0,
                                   r.spec_id))
    return [r.spec_id for r in ranked[:k]]
