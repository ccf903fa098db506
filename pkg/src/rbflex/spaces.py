"""Candidate architecture design spaces.

Two desk-scale spaces are supported:

* ``cell`` — a 4-node cell wired by 6 edges, each edge carrying one of 5 ops
  (5**6 = 15,625 encodings), stacked after a small conv stem and closed by
  GlobalAvgPool -> Linear.
* ``act`` — a fixed VGG-style conv backbone with every activation layer
  replaced by one of the 11 supported activation kinds (11 variants).

Specs are declarative and decode deterministically to runnable NetworkGraphs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .errors import ConfigError, SpaceExhausted
from .tensor_nn import (
    ActKind,
    Activation,
    Add,
    AvgPool,
    Conv2D,
    GlobalAvgPool,
    GraphBuilder,
    Identity,
    Linear,
    NetworkGraph,
    Zeroize,
)

__all__ = [
    "ActBackboneSpec",
    "CELL_EDGES",
    "CELL_OPS",
    "CellSpec",
    "cell_space_size",
    "decode",
    "decode_act_backbone",
    "decode_cell",
    "enumerate_cells",
    "parse_spec_id",
    "sample_specs",
    "spec_id",
]

# Edge k of the cell connects CELL_EDGES[k][0] -> CELL_EDGES[k][1].
CELL_EDGES = ((0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3))

# Frozen op-code order: spec_id digit d means CELL_OPS[d].
CELL_OPS = ("zeroize", "skip", "conv1x1", "conv3x3", "avgpool3x3")

ACT_ORDER = tuple(ActKind)  # frozen sampling/enumeration order


@dataclass(frozen=True)
class CellSpec:
    """One cell-space encoding: an op name per edge plus backbone sizes.

    The default stem width keeps the classifier input at least as wide as
    the largest protocol minibatch (N=32): with fewer features than images,
    the last-layer Gram matrix is first-order rank-deficient and scores
    collapse to the degenerate sentinel.
    """

    edge_ops: tuple[str, str, str, str, str, str]
    stem_channels: int = 32
    num_cells: int = 1
    num_classes: int = 10

    def __post_init__(self):
        if len(self.edge_ops) != len(CELL_EDGES):
            raise ConfigError(f"expected {len(CELL_EDGES)} edge ops, got {len(self.edge_ops)}")
        for op in self.edge_ops:
            if op not in CELL_OPS:
                raise ConfigError(f"unknown cell op {op!r}")
        if min(self.stem_channels, self.num_cells, self.num_classes) < 1:
            raise ConfigError("stem_channels, num_cells, num_classes must be positive")


@dataclass(frozen=True)
class ActBackboneSpec:
    """VGG-style backbone with a single activation kind used everywhere.

    The default plan ends 32 channels wide for the same reason the cell stem
    does: the classifier input must not be narrower than the minibatch.
    """

    activation: ActKind
    conv_plan: tuple[tuple[int, int], ...] = ((16, 1), (32, 1))
    num_classes: int = 10

    def __post_init__(self):
        if not self.conv_plan:
            raise ConfigError("conv_plan must have at least one stage")
        for ch, cnt in self.conv_plan:
            if ch < 1 or cnt < 1:
                raise ConfigError("conv_plan entries must be positive (channels, count)")


NetworkSpec = Union[CellSpec, ActBackboneSpec]


def cell_space_size() -> int:
    return len(CELL_OPS) ** len(CELL_EDGES)


# --------------------------------------------------------------------------
# decoding
# --------------------------------------------------------------------------

def _add_edge_op(g: GraphBuilder, op: str, src: int, channels: int) -> int:
    if op == "zeroize":
        return g.add(Zeroize(), src)
    if op == "skip":
        return g.add(Identity(), src)
    if op == "conv1x1":
        c = g.add(Conv2D(channels, 1, 1, 0), src)
        return g.add(Activation(ActKind.ReLU), c)
    if op == "conv3x3":
        c = g.add(Conv2D(channels, 3, 1, 1), src)
        return g.add(Activation(ActKind.ReLU), c)
    if op == "avgpool3x3":
        return g.add(AvgPool(3, 1, 1), src)
    raise ConfigError(f"unknown cell op {op!r}")


def decode_cell(spec: CellSpec, input_shape: tuple[int, int, int] = (3, 16, 16)) -> NetworkGraph:
    """Decode a cell encoding to a runnable graph.

    Stem conv (3x3, ReLU) -> num_cells stacked cells -> GlobalAvgPool ->
    Linear. Inside a cell, node value = elementwise sum of its transformed
    predecessors; conv edge ops are Conv -> ReLU.
    """
    g = GraphBuilder(input_shape)
    stem = g.add(Conv2D(spec.stem_channels, 3, 1, 1), 0)
    cur = g.add(Activation(ActKind.ReLU), stem)

    for _ in range(spec.num_cells):
        node_vals = {0: cur}
        for target in (1, 2, 3):
            contribs = []
            for k, (src, dst) in enumerate(CELL_EDGES):
                if dst != target:
                    continue
                contribs.append(_add_edge_op(g, spec.edge_ops[k], node_vals[src], spec.stem_channels))
            node_vals[target] = contribs[0] if len(contribs) == 1 else g.add(Add(), *contribs)
        cur = node_vals[3]

    gap = g.add(GlobalAvgPool(), cur)
    g.add(Linear(spec.num_classes), gap)
    return g.build()


def decode_act_backbone(spec: ActBackboneSpec,
                        input_shape: tuple[int, int, int] = (3, 32, 32)) -> NetworkGraph:
    """Decode an activation-substituted backbone.

    Each stage is `count` Conv3x3 -> activation blocks followed by a 2x2
    average pool; the head is GlobalAvgPool -> Linear.
    """
    g = GraphBuilder(input_shape)
    cur = 0
    for channels, count in spec.conv_plan:
        for _ in range(count):
            conv = g.add(Conv2D(channels, 3, 1, 1), cur)
            cur = g.add(Activation(spec.activation), conv)
        cur = g.add(AvgPool(2, 2, 0), cur)
    gap = g.add(GlobalAvgPool(), cur)
    g.add(Linear(spec.num_classes), gap)
    return g.build()


def decode(spec: NetworkSpec, input_shape: tuple[int, int, int] | None = None) -> NetworkGraph:
    if isinstance(spec, CellSpec):
        return decode_cell(spec, input_shape or (3, 16, 16))
    if isinstance(spec, ActBackboneSpec):
        return decode_act_backbone(spec, input_shape or (3, 32, 32))
    raise ConfigError(f"unknown spec type {type(spec).__name__}")


# --------------------------------------------------------------------------
# canonical ids
# --------------------------------------------------------------------------

def spec_id(spec: NetworkSpec) -> str:
    """Injective ASCII id, e.g. "cell|3,1,0,1,2,4" or "act|GELU".

    Encodes the in-space coordinates only; space-level settings
    (stem_channels, conv_plan, ...) are run configuration recorded in the
    manifest.
    """
    if isinstance(spec, CellSpec):
        return "cell|" + ",".join(str(CELL_OPS.index(op)) for op in spec.edge_ops)
    if isinstance(spec, ActBackboneSpec):
        return "act|" + spec.activation.value
    raise ConfigError(f"unknown spec type {type(spec).__name__}")


def parse_spec_id(sid: str, **space_kwargs) -> NetworkSpec:
    """Inverse of spec_id; extra kwargs set the space-level fields."""
    kind, _, payload = sid.partition("|")
    if kind == "cell":
        codes = payload.split(",")
        if len(codes) != len(CELL_EDGES):
            raise ConfigError(f"bad cell id {sid!r}")
        try:
            ops = tuple(CELL_OPS[int(c)] for c in codes)
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"bad cell id {sid!r}") from exc
        return CellSpec(edge_ops=ops, **space_kwargs)
    if kind == "act":
        try:
            act = ActKind(payload)
        except ValueError as exc:
            raise ConfigError(f"bad act id {sid!r}") from exc
        return ActBackboneSpec(activation=act, **space_kwargs)
    raise ConfigError(f"unknown space prefix in {sid!r}")


# --------------------------------------------------------------------------
# enumeration and sampling
# --------------------------------------------------------------------------

def _cell_from_index(i: int, **kwargs) -> CellSpec:
    ops = []
    for _ in range(len(CELL_EDGES)):
        ops.append(CELL_OPS[i % len(CELL_OPS)])
        i //= len(CELL_OPS)
    return CellSpec(edge_ops=tuple(ops), **kwargs)


def enumerate_cells(**kwargs) -> Iterator[CellSpec]:
    """Yield all 15,625 cell specs exactly once."""
    for i in range(cell_space_size()):
        yield _cell_from_index(i, **kwargs)


def sample_specs(space: str, count: int, seed, **space_kwargs) -> list[NetworkSpec]:
    """Uniform sample without replacement, deterministic under seed.

    `seed` may be an int or an existing numpy Generator (so one stream can
    serve several draws in a run).
    """
    if count < 1:
        raise ConfigError("count must be >= 1")
    if space == "cell":
        card = cell_space_size()
    elif space == "act":
        card = len(ACT_ORDER)
    else:
        raise ConfigError(f"unknown space {space!r}")
    if count > card:
        raise SpaceExhausted(f"space {space!r} holds {card} specs, asked for {count}")

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(int(seed))
    idx = rng.choice(card, size=count, replace=False)
    if space == "cell":
        return [_cell_from_index(int(i), **space_kwargs) for i in idx]
    return [ActBackboneSpec(activation=ACT_ORDER[int(i)], **space_kwargs) for i in idx]
