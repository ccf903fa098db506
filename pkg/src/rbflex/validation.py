"""Input validation helpers for the estimator-facing API."""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidGamma
from .scoring import TraceMatrices
from .tensor_nn import ForwardTrace


def check_gamma(value: float, name: str = "gamma") -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise InvalidGamma(f"{name} must be a positive finite number, got {value!r}")
    return value


def as_trace_matrices(obj) -> TraceMatrices:
    """Coerce a TraceMatrices, ForwardTrace or (X, Y) array pair."""
    if isinstance(obj, TraceMatrices):
        return obj
    if isinstance(obj, ForwardTrace):
        from .scoring import build_trace_matrices
        return build_trace_matrices(obj)
    if isinstance(obj, (tuple, list)) and len(obj) == 2:
        x, y = obj
        return TraceMatrices(x=np.atleast_2d(x), y=np.atleast_2d(y))
    raise TypeError(
        f"expected TraceMatrices, ForwardTrace or an (X, Y) pair, got {type(obj).__name__}")


def as_trace_list(traces) -> list[TraceMatrices]:
    if isinstance(traces, (TraceMatrices, ForwardTrace)):
        traces = [traces]
    out = [as_trace_matrices(t) for t in traces]
    if not out:
        raise ValueError("need at least one trace")
    return out
