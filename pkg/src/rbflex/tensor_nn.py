"""Minimal dense compute core for running untrained networks forward.

Tensors are C-contiguous float64 numpy arrays throughout: 4-D activations are
(batch, channels, height, width), 2-D features are (batch, features). All
arithmetic stays in 64-bit floats; a NaN/Inf appearing anywhere mid-graph is
an error, never a value that propagates.

The layer inventory is deliberately small: convolution, linear, average
pooling (local and global), elementwise activations, and the structural ops
(identity, zeroize, add, concat) needed by the cell-based design space. There
is no training machinery of any kind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np
from scipy.special import erf, expit

from .errors import NonFiniteValue, ShapeMismatch

__all__ = [
    "ActKind",
    "Activation",
    "Add",
    "AvgPool",
    "Concat",
    "Conv2D",
    "ForwardTrace",
    "GlobalAvgPool",
    "GraphNode",
    "Identity",
    "InputSlot",
    "LayerKind",
    "Linear",
    "NetworkGraph",
    "WeightSet",
    "Zeroize",
    "activation_apply",
    "conv2d_direct",
    "conv2d_im2col",
    "forward_traced",
    "init_weights",
]


# --------------------------------------------------------------------------
# activations
# --------------------------------------------------------------------------

class ActKind(Enum):
    """The eleven supported elementwise activation functions."""

    ReLU = "ReLU"
    GELU = "GELU"
    SiLU = "SiLU"
    LeakyReLU = "LeakyReLU"
    ReLU6 = "ReLU6"
    Mish = "Mish"
    Hardswish = "Hardswish"
    CELU = "CELU"
    ELU = "ELU"
    Hardtanh = "Hardtanh"
    SELU = "SELU"


# Fixed constants: LeakyReLU slope 0.01, ELU/CELU alpha 1.0, Hardtanh [-1, 1],
# SELU's standard lambda/alpha.
LEAKY_SLOPE = 0.01
SELU_LAMBDA = 1.0507009873554804934193349852
SELU_ALPHA = 1.6732632423543772848170429874
INV_SQRT2 = 1.0 / math.sqrt(2.0)


def _gelu(x):
    return 0.5 * x * (1.0 + erf(x * INV_SQRT2))


def _mish(x):
    # softplus via logaddexp keeps large |x| finite
    return x * np.tanh(np.logaddexp(0.0, x))


_ACT_FUNCS = {
    ActKind.ReLU: lambda x: np.maximum(x, 0.0),
    ActKind.GELU: _gelu,
    ActKind.SiLU: lambda x: x * expit(x),
    ActKind.LeakyReLU: lambda x: np.where(x > 0.0, x, LEAKY_SLOPE * x),
    ActKind.ReLU6: lambda x: np.clip(x, 0.0, 6.0),
    ActKind.Mish: _mish,
    ActKind.Hardswish: lambda x: x * np.clip(x + 3.0, 0.0, 6.0) / 6.0,
    ActKind.CELU: lambda x: np.maximum(x, 0.0) + np.minimum(np.expm1(x), 0.0),
    ActKind.ELU: lambda x: np.where(x > 0.0, x, np.expm1(x)),
    ActKind.Hardtanh: lambda x: np.clip(x, -1.0, 1.0),
    ActKind.SELU: lambda x: SELU_LAMBDA * np.where(x > 0.0, x, SELU_ALPHA * np.expm1(x)),
}


def activation_apply(kind: ActKind, x: np.ndarray) -> np.ndarray:
    """Apply one activation function elementwise, preserving shape."""
    x = np.asarray(x, dtype=np.float64)
    return np.ascontiguousarray(_ACT_FUNCS[kind](x))


# --------------------------------------------------------------------------
# layer kinds
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Conv2D:
    out_channels: int
    kernel_size: int
    stride: int = 1
    padding: int = 0


@dataclass(frozen=True)
class Linear:
    out_features: int


@dataclass(frozen=True)
class AvgPool:
    kernel: int
    stride: int
    padding: int = 0


@dataclass(frozen=True)
class GlobalAvgPool:
    pass


@dataclass(frozen=True)
class Activation:
    kind: ActKind


@dataclass(frozen=True)
class Zeroize:
    """Outputs zeros of the input shape (the 'none' cell op)."""


@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class Concat:
    """Concatenate inputs along the channel/feature axis."""


@dataclass(frozen=True)
class Add:
    """Elementwise sum of all inputs (shapes must match)."""


@dataclass(frozen=True)
class InputSlot:
    """Pseudo-op marking the graph input node."""


LayerKind = Union[
    Conv2D, Linear, AvgPool, GlobalAvgPool, Activation,
    Zeroize, Identity, Concat, Add, InputSlot,
]


def _pool_out(size: int, kernel: int, stride: int, padding: int) -> int:
    out = (size + 2 * padding - kernel) // stride + 1
    if out < 1:
        raise ShapeMismatch(f"window {kernel} too large for size {size} (pad {padding})")
    return out


def output_shape(op: LayerKind, input_shapes: list[tuple[int, ...]]) -> tuple[int, ...]:
    """Deterministic output shape of one layer given its input shapes."""
    if isinstance(op, InputSlot):
        return input_shapes[0]
    if isinstance(op, Conv2D):
        n, _, h, w = input_shapes[0]
        return (n, op.out_channels,
                _pool_out(h, op.kernel_size, op.stride, op.padding),
                _pool_out(w, op.kernel_size, op.stride, op.padding))
    if isinstance(op, Linear):
        n, _ = input_shapes[0]
        return (n, op.out_features)
    if isinstance(op, AvgPool):
        n, c, h, w = input_shapes[0]
        return (n, c,
                _pool_out(h, op.kernel, op.stride, op.padding),
                _pool_out(w, op.kernel, op.stride, op.padding))
    if isinstance(op, GlobalAvgPool):
        n, c, _, _ = input_shapes[0]
        return (n, c)
    if isinstance(op, (Activation, Zeroize, Identity)):
        return input_shapes[0]
    if isinstance(op, Add):
        first = input_shapes[0]
        for s in input_shapes[1:]:
            if s != first:
                raise ShapeMismatch(f"add inputs differ: {first} vs {s}")
        return first
    if isinstance(op, Concat):
        first = input_shapes[0]
        channels = 0
        for s in input_shapes:
            if s[0] != first[0] or s[2:] != first[2:]:
                raise ShapeMismatch(f"concat inputs differ: {first} vs {s}")
            channels += s[1]
        return (first[0], channels) + first[2:]
    raise TypeError(f"unknown layer kind: {op!r}")


# --------------------------------------------------------------------------
# graphs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphNode:
    op: LayerKind
    inputs: tuple[int, ...]


@dataclass
class NetworkGraph:
    """Topologically ordered DAG of layers.

    Node 0 is always the InputSlot; the last node is the single final Linear
    classifier. input_shape excludes the batch dimension.
    """

    nodes: list[GraphNode]
    input_shape: tuple[int, int, int]

    def __post_init__(self):
        if not self.nodes or not isinstance(self.nodes[0].op, InputSlot):
            raise ValueError("node 0 must be the InputSlot")
        if not isinstance(self.nodes[-1].op, Linear):
            raise ValueError("last node must be the final Linear layer")
        for i, node in enumerate(self.nodes):
            for j in node.inputs:
                if not 0 <= j < i:
                    raise ValueError(f"node {i} references {j}: not topologically ordered")
        # every node except the input must be reachable from node 0
        reachable = {0}
        for i, node in enumerate(self.nodes[1:], start=1):
            if any(j in reachable for j in node.inputs):
                reachable.add(i)
        if len(reachable) != len(self.nodes):
            raise ValueError("graph has nodes unreachable from the input")

    def node_shapes(self, batch: int = 1) -> list[tuple[int, ...]]:
        shapes: list[tuple[int, ...]] = [(batch,) + self.input_shape]
        for node in self.nodes[1:]:
            shapes.append(output_shape(node.op, [shapes[j] for j in node.inputs]))
        return shapes

    @property
    def output_shape(self) -> tuple[int, ...]:
        return self.node_shapes(batch=1)[-1]

    def activation_count(self) -> int:
        return sum(1 for n in self.nodes if isinstance(n.op, Activation))


class GraphBuilder:
    """Append-only helper that keeps node ids topologically ordered."""

    def __init__(self, input_shape: tuple[int, int, int]):
        self.input_shape = input_shape
        self._nodes: list[GraphNode] = [GraphNode(InputSlot(), ())]

    def add(self, op: LayerKind, *inputs: int) -> int:
        self._nodes.append(GraphNode(op, tuple(inputs)))
        return len(self._nodes) - 1

    def build(self) -> NetworkGraph:
        return NetworkGraph(nodes=list(self._nodes), input_shape=self.input_shape)


# --------------------------------------------------------------------------
# weights
# --------------------------------------------------------------------------

@dataclass
class WeightSet:
    """Per-node (weight, bias) arrays for Conv2D and Linear nodes."""

    seed: int
    params: dict[int, tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)


def init_weights(graph: NetworkGraph, seed: int) -> WeightSet:
    """Draw zero-mean normal weights with std sqrt(2 / fan_in), biases zero.

    The draw order is the graph's node order, so a given (graph, seed) pair
    always produces bit-identical weights.
    """
    rng = np.random.default_rng(int(seed))
    shapes = graph.node_shapes(batch=1)
    ws = WeightSet(seed=int(seed))
    for i, node in enumerate(graph.nodes):
        if isinstance(node.op, Conv2D):
            in_c = shapes[node.inputs[0]][1]
            k = node.op.kernel_size
            fan_in = in_c * k * k
            w = rng.standard_normal((node.op.out_channels, in_c, k, k)) * math.sqrt(2.0 / fan_in)
            b = np.zeros(node.op.out_channels)
        elif isinstance(node.op, Linear):
            in_f = shapes[node.inputs[0]][1]
            w = rng.standard_normal((node.op.out_features, in_f)) * math.sqrt(2.0 / in_f)
            b = np.zeros(node.op.out_features)
        else:
            continue
        ws.params[i] = (w, b)
    return ws


# --------------------------------------------------------------------------
# convolution: im2col fast path and the naive direct reference
# --------------------------------------------------------------------------

def conv2d_im2col(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                  stride: int = 1, padding: int = 0) -> np.ndarray:
    """Convolution as a matrix product over gathered patches.

    The product runs image by image: batched GEMMs pick blocking by row
    offset, which would let bitwise-identical images round differently.
    Identical inputs must produce identical trace rows.
    """
    n, c, h, wd = x.shape
    f, cw, k, _ = w.shape
    if cw != c:
        raise ShapeMismatch(f"kernel expects {cw} channels, input has {c}")
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho = _pool_out(h, k, stride, padding)
    wo = _pool_out(wd, k, stride, padding)
    win = np.lib.stride_tricks.sliding_window_view(xp, (k, k), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]          # (n, c, ho, wo, k, k)
    kernel = w.reshape(f, c * k * k).T
    out = np.empty((n, ho, wo, f))
    for i in range(n):
        cols = np.ascontiguousarray(win[i].transpose(1, 2, 0, 3, 4)).reshape(ho * wo, c * k * k)
        out[i] = (cols @ kernel + b).reshape(ho, wo, f)
    return np.ascontiguousarray(out.transpose(0, 3, 1, 2))


def conv2d_direct(x: np.ndarray, w: np.ndarray, b: np.ndarray,
                  stride: int = 1, padding: int = 0) -> np.ndarray:
    """Naive direct convolution with fully explicit loops.

    Slow by design; exists as the independent reference the fast path is
    checked against (agreement within 1e-12).
    """
    n, c, h, wd = x.shape
    f, cw, k, _ = w.shape
    if cw != c:
        raise ShapeMismatch(f"kernel expects {cw} channels, input has {c}")
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho = _pool_out(h, k, stride, padding)
    wo = _pool_out(wd, k, stride, padding)
    out = np.zeros((n, f, ho, wo))
    for bi in range(n):
        for fi in range(f):
            for oi in range(ho):
                for oj in range(wo):
                    acc = 0.0
                    for ci in range(c):
                        for ki in range(k):
                            for kj in range(k):
                                acc += xp[bi, ci, oi * stride + ki, oj * stride + kj] * w[fi, ci, ki, kj]
                    out[bi, fi, oi, oj] = acc + b[fi]
    return out


def _avg_pool(x: np.ndarray, kernel: int, stride: int, padding: int) -> np.ndarray:
    # zero padding counts toward the divisor (fixed kernel*kernel)
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = np.lib.stride_tricks.sliding_window_view(xp, (kernel, kernel), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]
    return np.ascontiguousarray(win.mean(axis=(4, 5)))


# --------------------------------------------------------------------------
# traced forward pass
# --------------------------------------------------------------------------

@dataclass
class ForwardTrace:
    """Everything the scorer needs from one forward pass.

    activation_outputs holds one tensor per Activation node, in graph order;
    last_layer_input is the tensor fed to the final Linear layer, captured
    before that layer runs. Logits are computed and discarded.
    """

    activation_outputs: list[np.ndarray]
    last_layer_input: np.ndarray


def _apply_node(op: LayerKind, inputs: list[np.ndarray], weights) -> np.ndarray:
    if isinstance(op, Conv2D):
        w, b = weights
        return conv2d_im2col(inputs[0], w, b, op.stride, op.padding)
    if isinstance(op, Linear):
        w, b = weights
        return inputs[0] @ w.T + b
    if isinstance(op, AvgPool):
        return _avg_pool(inputs[0], op.kernel, op.stride, op.padding)
    if isinstance(op, GlobalAvgPool):
        return np.ascontiguousarray(inputs[0].mean(axis=(2, 3)))
    if isinstance(op, Activation):
        return activation_apply(op.kind, inputs[0])
    if isinstance(op, Zeroize):
        return np.zeros_like(inputs[0])
    if isinstance(op, Identity):
        return inputs[0]
    if isinstance(op, Add):
        out = inputs[0].copy()
        for t in inputs[1:]:
            out += t
        return out
    if isinstance(op, Concat):
        return np.ascontiguousarray(np.concatenate(inputs, axis=1))
    raise TypeError(f"unknown layer kind: {op!r}")


def forward_traced(graph: NetworkGraph, weights: WeightSet,
                   minibatch: np.ndarray) -> ForwardTrace:
    """Run the graph forward, capturing activation outputs and the classifier input.

    Pure function of (graph, weights, minibatch); raises NonFiniteValue the
    moment any layer emits a NaN/Inf.
    """
    x = np.ascontiguousarray(np.asarray(minibatch, dtype=np.float64))
    if x.ndim != 4 or x.shape[1:] != tuple(graph.input_shape):
        raise ShapeMismatch(
            f"minibatch shape {x.shape} does not match graph input {graph.input_shape}")
    if not np.isfinite(x).all():
        raise NonFiniteValue("minibatch contains NaN/Inf")

    values: list[np.ndarray] = [x]
    activations: list[np.ndarray] = []
    last_linear = len(graph.nodes) - 1
    last_layer_input: np.ndarray | None = None

    for i, node in enumerate(graph.nodes[1:], start=1):
        ins = [values[j] for j in node.inputs]
        if i == last_linear:
            last_layer_input = ins[0]
        out = _apply_node(node.op, ins, weights.params.get(i))
        if not np.isfinite(out).all():
            raise NonFiniteValue(f"non-finite output at node {i} ({node.op!r})")
        values.append(out)
        if isinstance(node.op, Activation):
            activations.append(out)

    assert last_layer_input is not None
    return ForwardTrace(activation_outputs=activations, last_layer_input=last_layer_input)
