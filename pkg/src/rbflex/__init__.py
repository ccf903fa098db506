"""rbflex: training-free network scoring via RBF-kernel similarity.

Scores untrained candidate architectures from a single forward pass: the
flattened activation outputs and the final classifier's input features are
compared across a minibatch with Gaussian kernels whose bandwidths are
detected automatically from probe networks, and the network's score is the
batch-size-scaled sum of the two Gram log-determinants.
"""

__version__ = "0.1.0"

from .data import draw_minibatch, load_cifar_bin, save_cifar_bin, synth_images
from .estimators import NASWOTScorer, RBFleXScorer
from .harness import ExperimentConfig, run_search, stable_seed
from .hda import GammaPair, detect_gammas, epsilon_width_gamma, pair_stats
from .scoring import (
    SENTINEL_DEGENERATE,
    ScoreRecord,
    TraceMatrices,
    build_trace_matrices,
    is_degenerate,
    logdet_spd,
    naswot_score,
    normalize_columns,
    normalized_score_report,
    rbf_gram,
    rbflex_score,
)
from .spaces import (
    ActBackboneSpec,
    CellSpec,
    decode,
    enumerate_cells,
    parse_spec_id,
    sample_specs,
    spec_id,
)
from .stats import kendall_tau_b, kendall_tau_b_brute, pearson, top_k
from .tensor_nn import ActKind, ForwardTrace, activation_apply, forward_traced, init_weights

__all__ = [
    "ActBackboneSpec",
    "ActKind",
    "CellSpec",
    "ExperimentConfig",
    "ForwardTrace",
    "GammaPair",
    "NASWOTScorer",
    "RBFleXScorer",
    "SENTINEL_DEGENERATE",
    "ScoreRecord",
    "TraceMatrices",
    "activation_apply",
    "build_trace_matrices",
    "decode",
    "detect_gammas",
    "draw_minibatch",
    "enumerate_cells",
    "epsilon_width_gamma",
    "forward_traced",
    "init_weights",
    "is_degenerate",
    "kendall_tau_b",
    "kendall_tau_b_brute",
    "load_cifar_bin",
    "logdet_spd",
    "naswot_score",
    "normalize_columns",
    "normalized_score_report",
    "pair_stats",
    "parse_spec_id",
    "pearson",
    "rbf_gram",
    "rbflex_score",
    "run_search",
    "sample_specs",
    "save_cifar_bin",
    "spec_id",
    "stable_seed",
    "synth_images",
    "top_k",
]
