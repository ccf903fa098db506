"""Kernel-similarity network scoring.

The score of a network over an N-image minibatch is built from two matrices
captured during one untrained forward pass: X (rows = concatenated flattened
activation outputs per image) and Y (rows = flattened input of the final
classifier layer per image). Both are column-wise min-max normalized, turned
into RBF Gram matrices K and Q, and combined as

    score = N * (log|K| + log|Q|)

which equals log|K (x) Q| for the Kronecker product without ever forming the
N^2 x N^2 matrix. Higher is better. A singular Gram matrix (e.g. duplicate
images, or a network that collapses all inputs) yields a degenerate sentinel
that ranks below every finite score.

A binary-code baseline scorer is included for comparison: it binarizes the
activation outputs by sign and scores via the log-determinant of the Hamming
similarity matrix.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import AllDegenerate, InvalidGamma, NonFiniteValue, NotSymmetric
from .tensor_nn import ForwardTrace

__all__ = [
    "DEGENERATE_LABEL",
    "SENTINEL_DEGENERATE",
    "KernelPair",
    "ScoreRecord",
    "TraceMatrices",
    "build_trace_matrices",
    "is_degenerate",
    "kernel_pair",
    "logdet_spd",
    "naswot_score",
    "normalize_columns",
    "normalized_score_report",
    "rbf_gram",
    "rbflex_score",
    "score_from_matrices",
]

# Degenerate networks rank strictly below all finite scores; -inf gives that
# ordering for free. Serialized as the literal "DEGENERATE".
SENTINEL_DEGENERATE = float("-inf")
DEGENERATE_LABEL = "DEGENERATE"

_SYMMETRY_TOL = 1e-9
_PIVOT_FLOOR = 1e-300


def is_degenerate(score: float) -> bool:
    return score == SENTINEL_DEGENERATE


@dataclass
class TraceMatrices:
    """The (X, Y) pair for one network on one minibatch.

    x: (N, L_K) concatenated flattened activation outputs, one row per image.
    y: (N, L_Q) flattened last-layer input, one row per image.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.ascontiguousarray(np.asarray(self.x, dtype=np.float64))
        self.y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64))
        if self.x.ndim != 2 or self.y.ndim != 2:
            raise ValueError("trace matrices must be 2-D")
        if self.x.shape[0] != self.y.shape[0]:
            raise ValueError(f"row counts differ: {self.x.shape[0]} vs {self.y.shape[0]}")
        if not (np.isfinite(self.x).all() and np.isfinite(self.y).all()):
            raise NonFiniteValue("trace matrices contain NaN/Inf")

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass
class KernelPair:
    k: np.ndarray
    q: np.ndarray
    gamma_k: float
    gamma_q: float


@dataclass
class ScoreRecord:
    """One scored network, ready for CSV serialization."""

    spec_id: str
    score: float
    gamma_k: float
    gamma_q: float
    weight_seed: int
    batch_fingerprint: int

    CSV_COLUMNS = ("spec_id", "score", "gamma_k", "gamma_q", "weight_seed", "batch_fingerprint")

    def csv_row(self) -> list[str]:
        score = DEGENERATE_LABEL if is_degenerate(self.score) else repr(self.score)
        return [self.spec_id, score, repr(self.gamma_k), repr(self.gamma_q),
                str(self.weight_seed), str(self.batch_fingerprint)]

    @classmethod
    def from_csv_row(cls, row: list[str]) -> "ScoreRecord":
        score = SENTINEL_DEGENERATE if row[1] == DEGENERATE_LABEL else float(row[1])
        return cls(spec_id=row[0], score=score, gamma_k=float(row[2]), gamma_q=float(row[3]),
                   weight_seed=int(row[4]), batch_fingerprint=int(row[5]))


# --------------------------------------------------------------------------
# trace flattening
# --------------------------------------------------------------------------

def build_trace_matrices(trace: ForwardTrace) -> TraceMatrices:
    """Flatten a ForwardTrace into the (X, Y) matrix pair.

    Flattening order is frozen: activation layers in graph order, each tensor
    raveled channel-major (channel, row, column). Row i corresponds to image
    i of the minibatch.
    """
    if not trace.activation_outputs:
        raise ValueError("trace has no activation outputs")
    n = trace.activation_outputs[0].shape[0]
    x = np.concatenate([a.reshape(n, -1) for a in trace.activation_outputs], axis=1)
    y = trace.last_layer_input.reshape(n, -1)
    return TraceMatrices(x=x, y=y)


# --------------------------------------------------------------------------
# normalization and kernels
# --------------------------------------------------------------------------

def normalize_columns(m: np.ndarray) -> np.ndarray:
    """Column-wise min-max normalization; constant columns pass through unchanged."""
    m = np.asarray(m, dtype=np.float64)
    lo = m.min(axis=0)
    hi = m.max(axis=0)
    span = hi - lo
    varying = span != 0.0
    out = m.copy()
    out[:, varying] = (m[:, varying] - lo[varying]) / span[varying]
    return out


def _squared_distances(m: np.ndarray) -> np.ndarray:
    """Pairwise squared row distances, exactly zero for bitwise-equal rows.

    The quadratic-form identity is fast but cancels catastrophically near
    zero, leaving rounding noise where duplicate rows should give 0; those
    pairs are pinned after detecting duplicates by row digest.
    """
    sq = (m * m).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (m @ m.T)
    np.clip(d2, 0.0, None, out=d2)
    d2 = 0.5 * (d2 + d2.T)
    np.fill_diagonal(d2, 0.0)
    groups: dict[bytes, list[int]] = {}
    for i in range(m.shape[0]):
        groups.setdefault(hashlib.blake2b(m[i].tobytes(), digest_size=16).digest(), []).append(i)
    for rows in groups.values():
        for a in range(len(rows)):
            for b in range(a + 1, len(rows)):
                if np.array_equal(m[rows[a]], m[rows[b]]):
                    d2[rows[a], rows[b]] = 0.0
                    d2[rows[b], rows[a]] = 0.0
    return d2


def rbf_gram(m_norm: np.ndarray, gamma: float) -> np.ndarray:
    """Gaussian-kernel Gram matrix G_ij = exp(-gamma * ||row_i - row_j||^2).

    Exactly symmetric with an exact unit diagonal (squared distances are
    symmetrized and the diagonal pinned to zero before exponentiation);
    duplicate rows give kernel value exactly 1.
    """
    if not (isinstance(gamma, (int, float)) and math.isfinite(gamma) and gamma > 0):
        raise InvalidGamma(f"gamma must be a positive finite number, got {gamma!r}")
    m = np.ascontiguousarray(np.asarray(m_norm, dtype=np.float64))
    return np.exp(-float(gamma) * _squared_distances(m))


def kernel_pair(trace: TraceMatrices, gamma_k: float, gamma_q: float) -> KernelPair:
    """Normalize X and Y and build both Gram matrices."""
    k = rbf_gram(normalize_columns(trace.x), gamma_k)
    q = rbf_gram(normalize_columns(trace.y), gamma_q)
    return KernelPair(k=k, q=q, gamma_k=float(gamma_k), gamma_q=float(gamma_q))


# --------------------------------------------------------------------------
# log-determinant
# --------------------------------------------------------------------------

def logdet_spd(a: np.ndarray) -> float | None:
    """log|A| of a symmetric positive-definite matrix via Cholesky.

    Returns None when the matrix is numerically singular (e.g. a Gram matrix
    with duplicate rows): the factorization fails outright, or some pivot
    falls below the rank tolerance 4*n*eps*max(diag). An exactly singular
    matrix rounds to a pivot of order eps*diag whose sign is arbitrary, so a
    relative tolerance is needed to make the degenerate verdict
    deterministic; genuinely ill-conditioned but informative Gram matrices
    keep pivots orders of magnitude above it. Callers map None to the
    degenerate sentinel.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 2:
        raise ValueError(f"need a square matrix with N >= 2, got {a.shape}")
    asym = np.abs(a - a.T).max()
    if asym > _SYMMETRY_TOL:
        raise NotSymmetric(f"max asymmetry {asym:.3e} exceeds {_SYMMETRY_TOL:.0e}")
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return None
    pivots = np.diagonal(chol) ** 2
    tol = max(_PIVOT_FLOOR, 4.0 * a.shape[0] * np.finfo(np.float64).eps * a.diagonal().max())
    if pivots.min() <= tol:
        return None
    return float(np.log(pivots).sum())


# --------------------------------------------------------------------------
# scores
# --------------------------------------------------------------------------

def score_from_matrices(trace: TraceMatrices, gamma_k: float, gamma_q: float) -> float:
    """score = N * (log|K| + log|Q|); degenerate sentinel if either side is singular."""
    if trace.n < 2:
        raise ValueError("scoring needs at least 2 images")
    pair = kernel_pair(trace, gamma_k, gamma_q)
    ld_k = logdet_spd(pair.k)
    ld_q = logdet_spd(pair.q)
    if ld_k is None or ld_q is None:
        return SENTINEL_DEGENERATE
    return trace.n * (ld_k + ld_q)


def rbflex_score(trace: TraceMatrices, gamma_k: float, gamma_q: float, *,
                 spec_id: str = "", weight_seed: int = 0,
                 batch_fingerprint: int = 0) -> ScoreRecord:
    """Score one network's trace and wrap the result with its identity fields."""
    value = score_from_matrices(trace, gamma_k, gamma_q)
    return ScoreRecord(spec_id=spec_id, score=value, gamma_k=float(gamma_k),
                       gamma_q=float(gamma_q), weight_seed=weight_seed,
                       batch_fingerprint=batch_fingerprint)


def _binary_codes(x: np.ndarray) -> np.ndarray:
    return (x > 0.0)


def naswot_score(trace: ForwardTrace | TraceMatrices, minibatch_size: int | None = None) -> float:
    """Binary-code baseline: Hamming-similarity log-determinant.

    Each image's activation outputs are binarized by sign into a code c_i;
    the kernel entry is (#units - Hamming(c_i, c_j)) and the score is
    log|K_H|. Singular kernels (identical codes) yield the sentinel.
    """
    if isinstance(trace, TraceMatrices):
        x = trace.x
    else:
        x = build_trace_matrices(trace).x
    n, units = x.shape
    if minibatch_size is not None and minibatch_size != n:
        raise ValueError(f"trace has {n} rows, expected {minibatch_size}")
    if n < 2:
        raise ValueError("scoring needs at least 2 images")
    codes = _binary_codes(x).astype(np.float64)
    # matches = c_i . c_j + (1-c_i) . (1-c_j)  (= units - Hamming distance)
    kh = codes @ codes.T + (1.0 - codes) @ (1.0 - codes).T
    ld = logdet_spd(kh)
    return SENTINEL_DEGENERATE if ld is None else ld


def normalized_score_report(scores: list[float]) -> list[float]:
    """Divide each score by |min finite score| for reporting.

    The worst finite network maps to -1.0 when scores are negative (their
    usual sign); sentinels pass through unchanged. Reporting only: ranking
    always uses raw scores.
    """
    finite = [s for s in scores if not is_degenerate(s)]
    if not finite:
        raise AllDegenerate("no finite score to normalize against")
    denom = abs(min(finite))
    if denom == 0.0:
        return list(scores)
    return [s if is_degenerate(s) else s / denom for s in scores]
