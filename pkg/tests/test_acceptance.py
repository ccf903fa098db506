"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
report. Thresholds and fixtures were pilot-calibrated once and are frozen
here; every expected value is either computed by an independent oracle
inside the test or asserted against a hand-derived constant.
"""

import csv
import json
import math
import time

import numpy as np

from rbflex.cli import main as cli_main
from rbflex.data import draw_minibatch, synth_images
from rbflex.harness import (
    ExperimentConfig,
    run_batchsize_robustness,
    run_imagebatch_robustness,
    run_init_robustness,
    run_search,
    stable_seed,
)
from rbflex.hda import detect_gammas, epsilon_width_gamma, pair_stats
from rbflex.scoring import (
    TraceMatrices,
    build_trace_matrices,
    is_degenerate,
    kernel_pair,
    normalize_columns,
    rbf_gram,
    rbflex_score,
)
from rbflex.spaces import CellSpec, decode, enumerate_cells, parse_spec_id, spec_id
from rbflex.stats import kendall_tau_b, kendall_tau_b_brute, pearson, top_k
from rbflex.tensor_nn import conv2d_direct, conv2d_im2col, forward_traced, init_weights


def _report(num: int, name: str, detail: str = ""):
    suffix = f" ({detail})" if detail else ""
    print(f"[acceptance] criterion {num:02d} PASS - {name}{suffix}")


# -------------------------------------------------------------------------
# 1. Kronecker score identity
# -------------------------------------------------------------------------

def test_c01_kronecker_identity():
    rng = np.random.default_rng(101)
    t0 = time.monotonic()
    worst = 0.0
    for trial in range(200):
        n = 2 + trial % 7
        k_rows = rng.standard_normal((n, 10))
        q_rows = rng.standard_normal((n, 6))
        k = rbf_gram(k_rows, epsilon_width_gamma(k_rows, 0.1))
        q = rbf_gram(q_rows, epsilon_width_gamma(q_rows, 0.1))
        sign, ld = np.linalg.slogdet(np.kron(k, q))
        assert sign > 0
        fast = n * (np.linalg.slogdet(k)[1] + np.linalg.slogdet(q)[1])
        # the shipped path (Cholesky) against the explicit N^2 x N^2 oracle
        tm = TraceMatrices(x=k_rows, y=q_rows)
        produced = rbflex_score(tm, epsilon_width_gamma(normalize_columns(k_rows), 0.1),
                                epsilon_width_gamma(normalize_columns(q_rows), 0.1)).score
        pair = kernel_pair(tm, epsilon_width_gamma(normalize_columns(k_rows), 0.1),
                           epsilon_width_gamma(normalize_columns(q_rows), 0.1))
        sign2, oracle = np.linalg.slogdet(np.kron(pair.k, pair.q))
        assert sign2 > 0
        worst = max(worst, abs(produced - oracle), abs(fast - ld))
    elapsed = time.monotonic() - t0
    assert worst < 1e-9
    assert elapsed < 10.0
    _report(1, "Kronecker score identity", f"max |diff| {worst:.2e}, {elapsed:.1f}s")


# -------------------------------------------------------------------------
# 2. Bandwidth detection equals naive enumeration
# -------------------------------------------------------------------------

def _oracle_detect(traces, fallback=1.0):
    cands = {"k": [], "q": []}
    for trace in traces:
        for side, mat in (("k", trace.x), ("q", trace.y)):
            n = mat.shape[0]
            for i in range(n):
                for j in range(i + 1, n):
                    g = pair_stats(mat[i], mat[j]).g_ij
                    if g is not None:
                        cands[side].append(g)
    return (min(cands["k"]) if cands["k"] else fallback,
            min(cands["q"]) if cands["q"] else fallback,
            len(cands["k"]), len(cands["q"]),
            not cands["k"] or not cands["q"])


def test_c02_hda_exact_oracle():
    rng = np.random.default_rng(202)
    t0 = time.monotonic()
    fallback_seen = False
    for trial in range(100):
        m = int(rng.integers(1, 11))
        traces = []
        for _ in range(m):
            n = int(rng.integers(2, 17))
            x = rng.standard_normal((n, int(rng.integers(1, 65))))
            y = rng.standard_normal((n, int(rng.integers(1, 65))))
            if trial % 4 == 0 and n >= 3:
                x[1] = x[0]                     # forced D = 0
                y[0] = 0.25                     # constant rows: zero variance,
                y[1] = 0.75                     # distinct means
            traces.append(TraceMatrices(x=x, y=y))
        if trial % 10 == 0:
            # fallback path: every row identical on both sides
            traces = [TraceMatrices(x=np.ones((4, 8)), y=np.full((4, 5), 2.0))]
            fallback_seen = True
        got = detect_gammas(traces)
        want = _oracle_detect(traces)
        assert (got.gamma_k, got.gamma_q) == (want[0], want[1])
        assert (got.n_candidates_k, got.n_candidates_q) == (want[2], want[3])
        assert got.fallback_used == want[4]
    elapsed = time.monotonic() - t0
    assert fallback_seen
    assert elapsed < 10.0
    _report(2, "bandwidth detection equals naive enumeration", f"{elapsed:.1f}s")


# -------------------------------------------------------------------------
# 3. Kernel-floor property of the width-calibrated bandwidth
# -------------------------------------------------------------------------

def test_c03_epsilon_width_property():
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(100):
        rows = rng.standard_normal((int(rng.integers(2, 10)), int(rng.integers(1, 20))))
        d2max = max(float(((rows[i] - rows[j]) ** 2).sum())
                    for i in range(rows.shape[0]) for j in range(i + 1, rows.shape[0]))
        if d2max == 0.0:
            continue
        for eps in (0.01, 0.1, 1.0 / math.e):
            gamma = epsilon_width_gamma(rows, eps)
            worst = max(worst, abs(math.exp(-gamma * d2max) - eps))
    assert worst < 1e-12
    _report(3, "kernel value at farthest pair equals epsilon", f"max |diff| {worst:.1e}")


# -------------------------------------------------------------------------
# 4. Column normalization conformance
# -------------------------------------------------------------------------

def test_c04_normalization_conformance():
    rng = np.random.default_rng(404)
    for _ in range(50):
        m = rng.standard_normal((int(rng.integers(2, 12)), 8)) * rng.uniform(0.1, 50)
        m[:, 2] = rng.uniform(-5, 5)  # one constant column
        out = normalize_columns(m)
        for j in range(m.shape[1]):
            if np.ptp(m[:, j]) == 0.0:
                assert np.array_equal(out[:, j], m[:, j])
            else:
                assert out[:, j].min() == 0.0
                assert out[:, j].max() == 1.0
                assert ((out[:, j] >= 0.0) & (out[:, j] <= 1.0)).all()
    assert normalize_columns(np.array([[2.0], [4.0], [6.0]]))[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert normalize_columns(np.array([[5.0], [5.0], [5.0]]))[:, 0].tolist() == [5.0, 5.0, 5.0]
    assert normalize_columns(np.array([[0.0], [1.0]]))[:, 0].tolist() == [0.0, 1.0]
    _report(4, "column normalization conformance")


# -------------------------------------------------------------------------
# 5. Gram matrix validity
# -------------------------------------------------------------------------

def test_c05_gram_validity():
    rng = np.random.default_rng(505)
    min_eig = np.inf
    for _ in range(100):
        n = int(rng.integers(2, 13))
        tm = TraceMatrices(x=rng.standard_normal((n, 40)), y=rng.standard_normal((n, 9)))
        pair = kernel_pair(tm, float(rng.uniform(0.005, 2.0)), float(rng.uniform(0.005, 2.0)))
        for g in (pair.k, pair.q):
            assert np.abs(g - g.T).max() <= 1e-12
            assert (np.diagonal(g) == 1.0).all()
            assert (g > 0.0).all() and (g <= 1.0).all()
            min_eig = min(min_eig, float(np.linalg.eigvalsh(g).min()))
    assert min_eig >= -1e-9
    _report(5, "Gram validity", f"min eigenvalue {min_eig:.2e}")


# -------------------------------------------------------------------------
# 6. Kendall/Pearson oracles
# -------------------------------------------------------------------------

def test_c06_rank_stat_oracles():
    rng = np.random.default_rng(606)
    t0 = time.monotonic()
    checked = 0
    while checked < 1000:
        n = 2 + int(198 * rng.random() ** 2)
        x = rng.integers(0, max(2, n // 3), size=n).astype(float)
        y = rng.integers(0, max(2, n // 3), size=n).astype(float) \
            if rng.random() < 0.7 else rng.standard_normal(n)
        if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
            continue
        assert kendall_tau_b((x, y)) == kendall_tau_b_brute((x, y))
        checked += 1
    # worked examples, 1e-12 tolerance
    x = np.array([1.0, 2, 3, 4])
    assert abs(pearson((x, 2 * x + 1)) - 1.0) < 1e-12
    assert abs(pearson((x, -x)) + 1.0) < 1e-12
    assert abs(pearson((x, np.array([1.0, 3, 2, 4]))) - 0.8) < 1e-12
    assert abs(kendall_tau_b((x, 3 * x)) - 1.0) < 1e-12
    assert abs(kendall_tau_b((x, np.array([1.0, 2, 4, 3]))) - 4 / 6) < 1e-12
    assert abs(kendall_tau_b((np.array([1.0, 1, 2]), np.array([1.0, 2, 3])))
               - 2 / math.sqrt(6)) < 1e-12
    elapsed = time.monotonic() - t0
    _report(6, "Kendall merge-sort equals definitional; worked examples",
            f"1000 series, {elapsed:.1f}s")


# -------------------------------------------------------------------------
# 7. Convolution oracle
# -------------------------------------------------------------------------

def test_c07_convolution_oracle():
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 3))
        c = int(rng.integers(1, 4))
        f = int(rng.integers(1, 5))
        k = int(rng.choice([1, 3]))
        stride = int(rng.integers(1, 3))
        padding = int(rng.integers(0, 2))
        h = int(rng.integers(k, k + 6))
        w = int(rng.integers(k, k + 6))
        x = rng.standard_normal((n, c, h, w))
        wgt = rng.standard_normal((f, c, k, k))
        b = rng.standard_normal(f)
        fast = conv2d_im2col(x, wgt, b, stride, padding)
        slow = conv2d_direct(x, wgt, b, stride, padding)
        worst = max(worst, float(np.abs(fast - slow).max()))
    assert worst < 1e-12
    _report(7, "im2col convolution equals 6-loop direct", f"max |diff| {worst:.1e}")


# -------------------------------------------------------------------------
# 8. Degenerate-network handling
# -------------------------------------------------------------------------

def test_c08_degenerate_handling(tmp_path, capsys):
    images = synth_images(32, 16, 16, seed=3)
    mb = draw_minibatch(images, 8, seed=1)

    zero_spec = CellSpec(edge_ops=("zeroize",) * 6)
    graph = decode(zero_spec)
    trace = build_trace_matrices(forward_traced(graph, init_weights(graph, 0), mb.images))
    zero_rec = rbflex_score(trace, 0.5, 0.5, spec_id=spec_id(zero_spec))
    assert is_degenerate(zero_rec.score)

    healthy_spec = parse_spec_id("cell|3,1,2,1,2,4")
    hg = decode(healthy_spec)
    dup = mb.images.copy()
    dup[1] = dup[0]  # duplicated image in the minibatch
    dup_trace = build_trace_matrices(forward_traced(hg, init_weights(hg, 0), dup))
    assert is_degenerate(rbflex_score(dup_trace, 0.5, 0.5).score)

    ok_trace = build_trace_matrices(forward_traced(hg, init_weights(hg, 0), mb.images))
    ok_rec = rbflex_score(ok_trace, 0.5, 0.5, spec_id=spec_id(healthy_spec))
    assert not is_degenerate(ok_rec.score)
    assert top_k([zero_rec, ok_rec], 2) == [ok_rec.spec_id, zero_rec.spec_id]

    code = cli_main(["score", "--space", "cell", "--n", "8", "--m", "2", "--s", "4",
                     "--synth-count", "32", "--out", str(tmp_path)])
    assert code == 0
    capsys.readouterr()
    _report(8, "degenerate networks hit the sentinel and rank last, run exits 0")


# -------------------------------------------------------------------------
# 9. End-to-end determinism and cache soundness
# -------------------------------------------------------------------------

def test_c09_end_to_end_determinism(tmp_path, capsys):
    args = ["search", "--space", "cell", "--n", "8", "--m", "3", "--s", "6",
            "--synth-count", "48", "--seed-weights", "1", "--seed-batch", "2",
            "--seed-sampler", "3"]
    assert cli_main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli_main(args + ["--out", str(tmp_path / "b")]) == 0
    csv_a = (tmp_path / "a" / "scores_rbflex.csv").read_bytes()
    assert csv_a == (tmp_path / "b" / "scores_rbflex.csv").read_bytes()
    assert (tmp_path / "a" / "manifest.json").read_bytes() == \
           (tmp_path / "b" / "manifest.json").read_bytes()

    cache = str(tmp_path / "cache.jsonl")
    assert cli_main(args + ["--out", str(tmp_path / "c"), "--cache", cache]) == 0
    assert cli_main(args + ["--out", str(tmp_path / "d"), "--cache", cache]) == 0
    assert csv_a == (tmp_path / "c" / "scores_rbflex.csv").read_bytes()
    assert csv_a == (tmp_path / "d" / "scores_rbflex.csv").read_bytes()
    capsys.readouterr()
    _report(9, "byte-identical reruns; cache changes nothing")


# -------------------------------------------------------------------------
# 10. Desk-scale robustness suite (pilot-calibrated, frozen)
# -------------------------------------------------------------------------

ROBUSTNESS_FIXTURE = [
    "cell|2,1,2,0,3,0", "cell|4,1,4,1,4,1", "cell|3,3,3,2,1,0", "cell|4,4,1,0,0,1",
    "cell|1,4,4,1,0,4", "cell|0,3,3,0,3,3", "cell|2,0,0,0,2,1", "cell|4,1,2,2,0,0",
    "cell|4,4,4,4,4,4", "cell|2,2,2,2,2,2", "cell|1,1,1,1,1,1", "cell|3,2,4,1,4,4",
    "cell|1,2,2,4,0,4", "cell|0,3,1,0,3,1", "cell|0,0,3,4,1,1", "cell|3,2,2,1,2,0",
    "cell|1,0,0,0,4,2", "cell|1,0,3,0,0,3", "cell|1,3,3,1,3,0", "cell|4,4,3,3,1,1",
]

ROBUSTNESS_CONFIG = dict(space="cell", scorer="rbflex", n=16, m=10, s=20,
                         seed_weights=0, seed_batch=0, seed_sampler=1,
                         synth_count=64, stem_channels=64, num_cells=2)


def test_c10_robustness_suite():
    t0 = time.monotonic()
    config = ExperimentConfig(**ROBUSTNESS_CONFIG)
    kw = config.space_kwargs()
    specs = [parse_spec_id(sid, **kw) for sid in ROBUSTNESS_FIXTURE]

    init = run_init_robustness(config, n_inits=10, specs=specs)
    assert init["n_networks_used"] == 20
    assert init["separation_ratio"] < 0.5

    image = run_imagebatch_robustness(config, n_batches=10, specs=specs)
    assert image["n_networks_used"] == 20
    assert image["separation_ratio"] < 0.5

    sizes = run_batchsize_robustness(config, sizes=(4, 8, 16, 32), specs=specs)
    tau = sizes["pairwise_kendall"]["8-32"]
    assert tau >= 0.5

    elapsed = time.monotonic() - t0
    assert elapsed < 300.0
    _report(10, "robustness suite",
            f"init {init['separation_ratio']:.3f}, image {image['separation_ratio']:.3f}, "
            f"tau(8,32) {tau:.3f}, {elapsed:.0f}s")


# -------------------------------------------------------------------------
# 11. Activation-space discrimination
# -------------------------------------------------------------------------

def test_c11_activation_discrimination():
    config = ExperimentConfig(space="act", scorer="rbflex", n=16, m=10, s=11,
                              seed_weights=0, seed_batch=0, seed_sampler=0,
                              synth_count=64)
    result = run_search(config)
    records = result.records["rbflex"]
    assert len(records) == 11
    scores = [r.score for r in records]
    assert not any(is_degenerate(s) for s in scores)
    ordered = sorted(scores)
    min_gap = min(b - a for a, b in zip(ordered, ordered[1:]))
    assert min_gap > 1e-9
    _report(11, "all 11 activation variants finite and distinct",
            f"min gap {min_gap:.3g}")


# -------------------------------------------------------------------------
# 12. Benchmark-backed correlate path (mechanism check)
# -------------------------------------------------------------------------

def test_c12_correlate_with_reference_subset(tmp_path, capsys):
    # stands in for a user-supplied table of trained accuracies: covers the
    # whole cell space so any sampled subset joins cleanly
    ref_path = tmp_path / "reference.csv"
    with open(ref_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["spec_id", "accuracy"])
        for spec in enumerate_cells():
            sid = spec_id(spec)
            writer.writerow([sid, f"{(stable_seed(sid) % 10_000) / 100.0:.2f}"])

    code = cli_main(["correlate", "--space", "cell", "--n", "8", "--m", "3", "--s", "50",
                     "--synth-count", "64", "--reference", str(ref_path),
                     "--out", str(tmp_path / "out")])
    assert code == 0
    report = json.loads((tmp_path / "out" / "correlation.json").read_text())
    block = report["rbflex"]
    assert set(block) >= {"pearson", "kendall_tau_b", "n_used", "n_degenerate"}
    assert -1.0 <= block["pearson"] <= 1.0
    assert -1.0 <= block["kendall_tau_b"] <= 1.0
    assert block["n_used"] >= 50 - block["n_degenerate"]
    capsys.readouterr()
    _report(12, "correlate joins a user reference table and reports",
            f"n_used {block['n_used']}")
