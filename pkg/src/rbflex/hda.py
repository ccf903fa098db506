"""Automatic RBF bandwidth detection from probe-network traces.

For every pair of rows (v_i, v_j) of a trace matrix, the candidate bandwidth
is the squared error of the row means over twice the summed row variances:

    G_ij = (m_i - m_j)^2 / (2 * (s_i^2 + s_j^2))

Variances use the population divisor L. Pairs with equal means (D = 0) or
zero summed variance are inadmissible. The detected bandwidth for each side
(activation-output matrices X, last-layer-input matrices Y) is the global
minimum admissible candidate pooled over all probe networks; if nothing is
admissible, a flagged fallback of 1.0 keeps the pipeline total.

These functions operate on exactly the rows they are given. The scoring
pipeline (harness, estimators) passes the column-normalized matrices, so the
bandwidth is calibrated in the same metric space whose distances it scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AllRowsIdentical, LengthMismatch
from .scoring import TraceMatrices, _squared_distances

__all__ = [
    "FALLBACK_GAMMA",
    "GammaPair",
    "PairStats",
    "detect_gammas",
    "epsilon_width_gamma",
    "pair_stats",
]

FALLBACK_GAMMA = 1.0


@dataclass
class PairStats:
    """Mean/variance statistics of one row pair; g_ij is None when inadmissible."""

    m_i: float
    m_j: float
    s2_i: float
    s2_j: float
    d_ij: float
    g_ij: float | None


@dataclass
class GammaPair:
    gamma_k: float
    gamma_q: float
    n_candidates_k: int
    n_candidates_q: int
    fallback_used: bool

    def as_dict(self) -> dict:
        return {"gamma_k": self.gamma_k, "gamma_q": self.gamma_q,
                "n_candidates_k": self.n_candidates_k,
                "n_candidates_q": self.n_candidates_q,
                "fallback_used": self.fallback_used}


def pair_stats(v_i: np.ndarray, v_j: np.ndarray) -> PairStats:
    """Statistics of one vector pair (population variance, divisor L)."""
    v_i = np.ascontiguousarray(np.asarray(v_i, dtype=np.float64)).ravel()
    v_j = np.ascontiguousarray(np.asarray(v_j, dtype=np.float64)).ravel()
    if v_i.shape != v_j.shape:
        raise LengthMismatch(f"{v_i.shape[0]} vs {v_j.shape[0]}")
    if v_i.shape[0] < 1:
        raise LengthMismatch("vectors must be non-empty")
    m_i = float(np.mean(v_i))
    m_j = float(np.mean(v_j))
    s2_i = float(np.var(v_i))
    s2_j = float(np.var(v_j))
    d = (m_i - m_j) ** 2
    s2_sum = s2_i + s2_j
    g = d / (2.0 * s2_sum) if (d != 0.0 and s2_sum > 0.0) else None
    return PairStats(m_i=m_i, m_j=m_j, s2_i=s2_i, s2_j=s2_j, d_ij=d, g_ij=g)


def _side_candidates(m: np.ndarray) -> list[float]:
    """Admissible G values over all row pairs (i < j) of one matrix."""
    m = np.ascontiguousarray(np.asarray(m, dtype=np.float64))
    means = np.mean(m, axis=1)
    variances = np.var(m, axis=1)
    out: list[float] = []
    n = m.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            d = (float(means[i]) - float(means[j])) ** 2
            s2_sum = float(variances[i]) + float(variances[j])
            if d != 0.0 and s2_sum > 0.0:
                out.append(d / (2.0 * s2_sum))
    return out


def detect_gammas(probe_traces: Sequence[TraceMatrices] | Iterable[TraceMatrices],
                  fallback: float = FALLBACK_GAMMA) -> GammaPair:
    """Pool admissible candidates over all probes and take each side's minimum."""
    cands_k: list[float] = []
    cands_q: list[float] = []
    for trace in probe_traces:
        cands_k.extend(_side_candidates(trace.x))
        cands_q.extend(_side_candidates(trace.y))
    fb = False
    if cands_k:
        gamma_k = min(cands_k)
    else:
        gamma_k, fb = fallback, True
    if cands_q:
        gamma_q = min(cands_q)
    else:
        gamma_q, fb = fallback, True
    return GammaPair(gamma_k=gamma_k, gamma_q=gamma_q,
                     n_candidates_k=len(cands_k), n_candidates_q=len(cands_q),
                     fallback_used=fb)


def epsilon_width_gamma(rows: np.ndarray, epsilon: float) -> float:
    """Bandwidth making the farthest row pair's kernel value exactly epsilon.

    gamma = ln(1/eps) / max_{i,j} ||row_i - row_j||^2. Diagnostic selector
    for sensitivity sweeps, not the default detection path.
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    m = np.ascontiguousarray(np.asarray(rows, dtype=np.float64))
    if m.ndim != 2 or m.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least two rows")
    maxdist = float(_squared_distances(m).max())
    if maxdist == 0.0:
        raise AllRowsIdentical("no distinct row pair to calibrate against")
    return math.log(1.0 / epsilon) / maxdist
