"""Experiment orchestration: probe detection, scoring sweeps, robustness
studies, correlation reports and top-1 search, all reproducible from a seed
triple (weights, batch, sampler).

One minibatch per run is shared by the bandwidth probes and every scored
candidate. Per-network weight seeds are derived from the weight seed and the
spec_id, so identical specs always receive identical weights and results are
independent of evaluation order. All emitted CSV/JSON is byte-deterministic;
wall-clock timings go to a separate file so the manifest stays reproducible.
"""

from __future__ import annotations

import csv
import hashlib
import json
import threading
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .data import ImageSet, Minibatch, draw_minibatch, resolve_image_set
from .errors import AllDegenerate, ConfigError, JoinMiss
from .hda import GammaPair, detect_gammas, epsilon_width_gamma
from .scoring import (
    ScoreRecord,
    TraceMatrices,
    build_trace_matrices,
    is_degenerate,
    naswot_score,
    normalize_columns,
    rbflex_score,
)
from .spaces import decode, sample_specs, spec_id
from .stats import kendall_tau_b, pearson, top_k
from .tensor_nn import forward_traced, init_weights

__all__ = [
    "ExperimentConfig",
    "ScoreCache",
    "SearchResult",
    "load_reference_csv",
    "run_batchsize_robustness",
    "run_correlation",
    "run_gamma_sweep",
    "run_imagebatch_robustness",
    "run_init_robustness",
    "run_search",
    "stable_seed",
    "write_scores_csv",
]

_SCORERS = ("rbflex", "naswot", "both")


def stable_seed(*parts) -> int:
    """64-bit seed derived from the given parts; stable across runs and platforms."""
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


@dataclass
class ExperimentConfig:
    """Everything that identifies a run. Defaults N=16, M=10 follow the
    standard protocol."""

    space: str = "cell"
    scorer: str = "rbflex"
    n: int = 16                 # minibatch size
    m: int = 10                 # probe networks for bandwidth detection
    s: int = 100                # candidates to score
    seed_weights: int = 0
    seed_batch: int = 0
    seed_sampler: int = 0
    data: str | None = "synthetic"
    out_dir: str | None = None
    cache_path: str | None = None
    stem_channels: int = 32
    num_cells: int = 1
    num_classes: int = 10
    synth_count: int = 128
    synth_size: int | None = None  # synthetic image H=W; default 16 (cell) / 32 (act)
    repeats: int = 1
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.space not in ("cell", "act"):
            raise ConfigError(f"unknown space {self.space!r}")
        if self.scorer not in _SCORERS:
            raise ConfigError(f"unknown scorer {self.scorer!r}")
        if self.n < 2:
            raise ConfigError("minibatch size must be >= 2")
        if self.m < 1 or self.s < 1 or self.repeats < 1:
            raise ConfigError("m, s and repeats must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    @property
    def scorers(self) -> tuple[str, ...]:
        return ("rbflex", "naswot") if self.scorer == "both" else (self.scorer,)

    def space_kwargs(self) -> dict:
        if self.space == "cell":
            return {"stem_channels": self.stem_channels, "num_cells": self.num_cells,
                    "num_classes": self.num_classes}
        return {"num_classes": self.num_classes}

    def echo(self) -> dict:
        """Config fields that identify the experiment (I/O locations excluded)."""
        return {
            "space": self.space, "scorer": self.scorer, "n": self.n, "m": self.m,
            "s": self.s, "seed_weights": self.seed_weights, "seed_batch": self.seed_batch,
            "seed_sampler": self.seed_sampler, "data": self.data or "synthetic",
            "space_kwargs": self.space_kwargs(), "synth_count": self.synth_count,
            "synth_size": self.synth_size, "repeats": self.repeats,
        }


# --------------------------------------------------------------------------
# run plumbing
# --------------------------------------------------------------------------

@dataclass
class _RunContext:
    config: ExperimentConfig
    images: ImageSet
    minibatch: Minibatch
    input_shape: tuple[int, int, int]


def _prepare(config: ExperimentConfig, n: int | None = None,
             batch_seed: int | None = None) -> _RunContext:
    config.validate()
    size = config.synth_size or (16 if config.space == "cell" else 32)
    images = resolve_image_set(config.data, synth_count=config.synth_count,
                               synth_hw=(size, size), synth_seed=stable_seed(config.seed_batch, "set"))
    minibatch = draw_minibatch(images, n if n is not None else config.n,
                               batch_seed if batch_seed is not None else config.seed_batch)
    shape = images.images.shape
    return _RunContext(config=config, images=images, minibatch=minibatch,
                       input_shape=(shape[1], shape[2], shape[3]))


def _trace_for(spec, ctx: _RunContext, weight_seed: int,
               minibatch: Minibatch | None = None) -> TraceMatrices:
    graph = decode(spec, ctx.input_shape)
    weights = init_weights(graph, weight_seed)
    batch = minibatch if minibatch is not None else ctx.minibatch
    return build_trace_matrices(forward_traced(graph, weights, batch.images))


def _weight_seed(base: int, sid: str) -> int:
    return stable_seed(base, sid)


def _detect(probe_specs, ctx: _RunContext, weight_base: int,
            minibatch: Minibatch | None = None) -> GammaPair:
    # bandwidths are calibrated on the same column-normalized rows the
    # kernels consume; raw-scale rows would misscale the exponent
    traces = [_trace_for(p, ctx, _weight_seed(weight_base, spec_id(p)), minibatch)
              for p in probe_specs]
    normalized = [TraceMatrices(x=normalize_columns(t.x), y=normalize_columns(t.y))
                  for t in traces]
    return detect_gammas(normalized)


def _score_one(spec, ctx: _RunContext, scorer: str, gamma: GammaPair | None,
               weight_base: int, cache: "ScoreCache | None",
               minibatch: Minibatch | None = None,
               trace: TraceMatrices | None = None) -> ScoreRecord:
    sid = spec_id(spec)
    wseed = _weight_seed(weight_base, sid)
    batch = minibatch if minibatch is not None else ctx.minibatch
    gk = gamma.gamma_k if (gamma and scorer == "rbflex") else 0.0
    gq = gamma.gamma_q if (gamma and scorer == "rbflex") else 0.0
    if cache is not None:
        hit = cache.get(sid, scorer, wseed, batch.fingerprint, gk, gq)
        if hit is not None:
            return hit
    if trace is None:
        trace = _trace_for(spec, ctx, wseed, batch)
    if scorer == "rbflex":
        record = rbflex_score(trace, gk, gq, spec_id=sid, weight_seed=wseed,
                              batch_fingerprint=batch.fingerprint)
    else:
        record = ScoreRecord(spec_id=sid, score=naswot_score(trace), gamma_k=gk,
                             gamma_q=gq, weight_seed=wseed,
                             batch_fingerprint=batch.fingerprint)
    if cache is not None:
        cache.put(scorer, record)
    return record


def _score_spec_all(spec, ctx: _RunContext, gamma: GammaPair | None, weight_base: int,
                    cache: "ScoreCache | None", minibatch: Minibatch | None
                    ) -> dict[str, ScoreRecord]:
    """One candidate under every configured scorer, computing its trace at most once."""
    out: dict[str, ScoreRecord] = {}
    trace: TraceMatrices | None = None
    sid = spec_id(spec)
    wseed = _weight_seed(weight_base, sid)
    batch = minibatch if minibatch is not None else ctx.minibatch
    for scorer in ctx.config.scorers:
        gk = gamma.gamma_k if (gamma and scorer == "rbflex") else 0.0
        gq = gamma.gamma_q if (gamma and scorer == "rbflex") else 0.0
        hit = cache.get(sid, scorer, wseed, batch.fingerprint, gk, gq) if cache else None
        if hit is not None:
            out[scorer] = hit
            continue
        if trace is None:
            trace = _trace_for(spec, ctx, wseed, batch)
        out[scorer] = _score_one(spec, ctx, scorer, gamma, weight_base, None, minibatch, trace)
        if cache is not None:
            cache.put(scorer, out[scorer])
    return out


def _score_many(specs, ctx: _RunContext, gamma: GammaPair | None, weight_base: int,
                cache: "ScoreCache | None", minibatch: Minibatch | None = None,
                into: dict[str, list[ScoreRecord]] | None = None
                ) -> dict[str, list[ScoreRecord]]:
    """Score every spec with every configured scorer; output sorted by spec_id.

    With workers > 1 candidates are fanned out across threads; all seeds are
    already fixed per spec_id, and results are merged in sorted spec_id
    order, so parallelism cannot change any emitted number. `into` lets
    callers observe partial results if scoring aborts mid-way.
    """
    records = into if into is not None else {sc: [] for sc in ctx.config.scorers}
    ordered = sorted(specs, key=spec_id)
    workers = ctx.config.workers
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda sp: _score_spec_all(sp, ctx, gamma, weight_base, cache, minibatch),
                ordered))
        for per_scorer in results:
            for scorer, rec in per_scorer.items():
                records[scorer].append(rec)
        return records
    for spec in ordered:
        per_scorer = _score_spec_all(spec, ctx, gamma, weight_base, cache, minibatch)
        for scorer, rec in per_scorer.items():
            records[scorer].append(rec)
    return records


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def write_scores_csv(path: str | Path, records: list[ScoreRecord]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ScoreRecord.CSV_COLUMNS)
        for rec in records:
            writer.writerow(rec.csv_row())


def read_scores_csv(path: str | Path) -> list[ScoreRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return [ScoreRecord.from_csv_row(row) for row in rows[1:]]


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def load_reference_csv(path: str | Path) -> dict[str, float]:
    """Read a `spec_id,accuracy` reference table."""
    table: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["spec_id", "accuracy"]:
            raise ConfigError(f"{path}: expected header 'spec_id,accuracy'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                table[row[0]] = float(row[1])
            except (IndexError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad reference row {row!r}") from exc
    if not table:
        raise ConfigError(f"{path}: reference table is empty")
    return table


# --------------------------------------------------------------------------
# score cache
# --------------------------------------------------------------------------

class ScoreCache:
    """Append-only JSONL cache keyed by everything that determines a score.

    Corrupt lines are skipped with a warning and recomputed on demand.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[str, ScoreRecord] = {}
        if self.path.exists():
            for lineno, line in enumerate(self.path.read_text().splitlines(), start=1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                    record = ScoreRecord.from_csv_row(entry["record"])
                    self._index[entry["key"]] = record
                except (ValueError, KeyError, IndexError):
                    warnings.warn(f"{self.path}:{lineno}: corrupt cache line skipped")

    @staticmethod
    def _key(sid: str, scorer: str, weight_seed: int, batch_fp: int,
             gamma_k: float, gamma_q: float) -> str:
        return f"{scorer}|{sid}|{weight_seed}|{batch_fp}|{gamma_k!r}|{gamma_q!r}"

    def get(self, sid, scorer, weight_seed, batch_fp, gamma_k, gamma_q) -> ScoreRecord | None:
        with self._lock:
            return self._index.get(self._key(sid, scorer, weight_seed, batch_fp, gamma_k, gamma_q))

    def put(self, scorer: str, record: ScoreRecord) -> None:
        key = self._key(record.spec_id, scorer, record.weight_seed,
                        record.batch_fingerprint, record.gamma_k, record.gamma_q)
        with self._lock:
            if key in self._index:
                return
            self._index[key] = record
            with open(self.path, "a") as fh:
                fh.write(json.dumps({"key": key, "record": record.csv_row()}) + "\n")


# --------------------------------------------------------------------------
# search
# --------------------------------------------------------------------------

@dataclass
class SearchResult:
    manifest: dict
    records: dict[str, list[ScoreRecord]]
    top1: dict[str, str]
    timings: dict = field(default_factory=dict)


def run_search(config: ExperimentConfig) -> SearchResult:
    """Draw one minibatch, detect bandwidths on M probes, score S candidates.

    Emits per-scorer CSVs plus a deterministic manifest when out_dir is set;
    partial results are flushed if scoring aborts.
    """
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    ctx = _prepare(config)
    timings["data_s"] = time.perf_counter() - t0

    rng = np.random.default_rng(config.seed_sampler)
    kw = config.space_kwargs()
    probes = sample_specs(config.space, config.m, rng, **kw)
    candidates = sample_specs(config.space, config.s, rng, **kw)

    t1 = time.perf_counter()
    gamma = _detect(probes, ctx, config.seed_weights) if "rbflex" in config.scorers else None
    timings["hda_s"] = time.perf_counter() - t1

    cache = ScoreCache(config.cache_path) if config.cache_path else None
    out = Path(config.out_dir) if config.out_dir else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    t2 = time.perf_counter()
    records: dict[str, list[ScoreRecord]] = {sc: [] for sc in config.scorers}
    try:
        _score_many(candidates, ctx, gamma, config.seed_weights, cache, into=records)
    except Exception:
        if out:  # flush whatever was scored before the failure
            for scorer, recs in records.items():
                write_scores_csv(out / f"scores_{scorer}.partial.csv", recs)
            _write_json(out / "manifest.partial.json", {"config": config.echo(),
                                                        "status": "aborted"})
        raise
    timings["scoring_s"] = time.perf_counter() - t2

    top1 = {}
    n_degenerate = {}
    for scorer, recs in records.items():
        n_degenerate[scorer] = sum(1 for r in recs if is_degenerate(r.score))
        top1[scorer] = top_k(recs, 1)[0]

    manifest = {
        "engine_version": __version__,
        "config": config.echo(),
        "input_shape": list(ctx.input_shape),
        "batch_fingerprint": ctx.minibatch.fingerprint,
        "gamma": gamma.as_dict() if gamma else None,
        "probe_spec_ids": [spec_id(p) for p in probes],
        "n_candidates": len(candidates),
        "n_degenerate": n_degenerate,
        "top1": top1,
    }
    timings["total_s"] = time.perf_counter() - t0

    if out:
        for scorer, recs in records.items():
            write_scores_csv(out / f"scores_{scorer}.csv", recs)
        _write_json(out / "manifest.json", manifest)
        _write_json(out / "timings.json", {k: round(v, 6) for k, v in timings.items()})

    return SearchResult(manifest=manifest, records=records, top1=top1, timings=timings)


# --------------------------------------------------------------------------
# robustness protocols
# --------------------------------------------------------------------------

def _primary_scorer(config: ExperimentConfig) -> str:
    return "naswot" if config.scorer == "naswot" else "rbflex"


def _sample_study_specs(config: ExperimentConfig, specs):
    rng = np.random.default_rng(config.seed_sampler)
    kw = config.space_kwargs()
    probes = sample_specs(config.space, config.m, rng, **kw)
    if specs is None:
        specs = sample_specs(config.space, config.s, rng, **kw)
    if not specs:
        raise ConfigError("no networks to study")
    # duplicate ids score identically (seeds derive from spec_id); keep one
    unique = {spec_id(sp): sp for sp in specs}
    return probes, [unique[sid] for sid in sorted(unique)]


def _minmax_trial(scores: dict[str, float]) -> dict[str, float]:
    """Min-max normalize one trial's finite scores; sentinels pass through."""
    finite = [v for v in scores.values() if not is_degenerate(v)]
    if not finite:
        raise AllDegenerate("a whole trial scored degenerate")
    lo, hi = min(finite), max(finite)
    if hi == lo:
        raise ConfigError("networks are indistinguishable within a trial")
    return {k: (v if is_degenerate(v) else (v - lo) / (hi - lo)) for k, v in scores.items()}


def _separation_report(trials: list[dict[str, float]], label: str) -> dict:
    """Spread summary over repeated trials of the same network set.

    Each trial is min-max normalized first (the level and scale of raw
    scores move with the trial's conditions; the study asks whether the
    relative placement of networks moves). The headline figure is
    (max per-network std) / (std of per-network means): well below 1 means
    the scorer separates networks more than the studied nuisance moves them.
    """
    normalized = [_minmax_trial(t) for t in trials]
    per_network: dict[str, list[float]] = {}
    raw: dict[str, list[float]] = {}
    for norm_t, raw_t in zip(normalized, trials):
        for sid, v in norm_t.items():
            per_network.setdefault(sid, []).append(v)
            raw.setdefault(sid, []).append(raw_t[sid])

    rows = []
    means = []
    stds = []
    for sid in sorted(per_network):
        values = per_network[sid]
        finite = [v for v in values if not is_degenerate(v)]
        n_deg = len(values) - len(finite)
        if n_deg == 0:
            mean = float(np.mean(values))
            std = float(np.std(values))
            means.append(mean)
            stds.append(std)
            raw_mean = float(np.mean(raw[sid]))
        else:
            mean = std = raw_mean = None
        rows.append({"spec_id": sid, "mean": mean, "std": std, "raw_mean": raw_mean,
                     f"n_degenerate_{label}": n_deg})
    if len(means) < 2:
        raise AllDegenerate("fewer than two networks with all-finite scores")
    spread = float(np.std(means))
    if spread == 0.0:
        raise ConfigError("networks are indistinguishable: zero spread of means")
    return {
        "per_network": rows,
        "n_networks_used": len(means),
        "max_within_std": float(max(stds)),
        "between_network_std": spread,
        "separation_ratio": float(max(stds)) / spread,
    }


def run_init_robustness(config: ExperimentConfig, n_inits: int = 10,
                        specs=None) -> dict:
    """Score a fixed network set under n_inits weight draws; summarize spread.

    One bandwidth pair serves the whole study (detected at the base weight
    seed); per-network weight seeds derive from (trial, spec_id), so
    duplicate specs score identically within a trial.
    """
    if n_inits < 2:
        raise ConfigError("need at least 2 inits")
    ctx = _prepare(config)
    scorer = _primary_scorer(config)
    probes, specs = _sample_study_specs(config, specs)
    gamma = _detect(probes, ctx, config.seed_weights) if scorer == "rbflex" else None

    trials = []
    for trial in range(n_inits):
        wbase = stable_seed(config.seed_weights, "init", trial)
        trials.append({spec_id(sp): _score_one(sp, ctx, scorer, gamma, wbase, None).score
                       for sp in specs})

    report = _separation_report(trials, "inits")
    report.update({"study": "init_robustness", "scorer": scorer, "n_inits": n_inits,
                   "gamma": gamma.as_dict() if gamma else None})
    return report


def run_imagebatch_robustness(config: ExperimentConfig, n_batches: int = 10,
                              specs=None) -> dict:
    """Score a fixed network set on n_batches different minibatches.

    Bandwidths come from the reference minibatch (config.seed_batch) and are
    reused across all batches, keeping one pair per run.
    """
    if n_batches < 2:
        raise ConfigError("need at least 2 batches")
    ctx = _prepare(config)
    scorer = _primary_scorer(config)
    probes, specs = _sample_study_specs(config, specs)
    gamma = _detect(probes, ctx, config.seed_weights) if scorer == "rbflex" else None

    trials = []
    for b in range(n_batches):
        minibatch = draw_minibatch(ctx.images, config.n, stable_seed(config.seed_batch, "batch", b))
        trials.append({spec_id(sp): _score_one(sp, ctx, scorer, gamma, config.seed_weights,
                                               None, minibatch).score
                       for sp in specs})

    report = _separation_report(trials, "batches")
    report.update({"study": "imagebatch_robustness", "scorer": scorer,
                   "n_batches": n_batches, "gamma": gamma.as_dict() if gamma else None})
    return report


def run_batchsize_robustness(config: ExperimentConfig, sizes=(4, 8, 16, 32),
                             specs=None) -> dict:
    """Score a fixed network set at several minibatch sizes; compare rankings
    with tie-corrected Kendall correlation for every size pair.

    As above, one bandwidth pair (from the reference minibatch at config.n)
    serves every size.
    """
    sizes = tuple(int(s) for s in sizes)
    if any(s < 2 for s in sizes):
        raise ConfigError("minibatch sizes must be >= 2")
    ctx = _prepare(config)
    scorer = _primary_scorer(config)
    probes, specs = _sample_study_specs(config, specs)
    sids = [spec_id(sp) for sp in specs]
    gamma = _detect(probes, ctx, config.seed_weights) if scorer == "rbflex" else None

    by_size: dict[int, dict[str, float]] = {}
    for size in sizes:
        minibatch = draw_minibatch(ctx.images, size, stable_seed(config.seed_batch, "size", size))
        by_size[size] = {spec_id(sp): _score_one(sp, ctx, scorer, gamma, config.seed_weights,
                                                 None, minibatch).score
                         for sp in specs}

    pairwise = {}
    for i, a in enumerate(sizes):
        for b in sizes[i + 1:]:
            common = [sid for sid in sids
                      if not is_degenerate(by_size[a][sid]) and not is_degenerate(by_size[b][sid])]
            xa = np.array([by_size[a][sid] for sid in common])
            xb = np.array([by_size[b][sid] for sid in common])
            pairwise[f"{a}-{b}"] = kendall_tau_b((xa, xb))

    return {"study": "batchsize_robustness", "scorer": scorer, "sizes": list(sizes),
            "pairwise_kendall": pairwise, "gamma": gamma.as_dict() if gamma else None,
            "scores": {str(s): by_size[s] for s in sizes}}


# --------------------------------------------------------------------------
# correlation vs reference accuracies
# --------------------------------------------------------------------------

def run_correlation(config: ExperimentConfig, reference: dict[str, float]) -> dict:
    """Join scores against a reference table and report both correlations.

    With repeats > 1, candidates are resampled (continuing the sampler
    stream) and the mean correlations are reported alongside per-repeat
    values.
    """
    ctx = _prepare(config)
    rng = np.random.default_rng(config.seed_sampler)
    kw = config.space_kwargs()
    probes = sample_specs(config.space, config.m, rng, **kw)
    gamma = _detect(probes, ctx, config.seed_weights) if "rbflex" in config.scorers else None
    cache = ScoreCache(config.cache_path) if config.cache_path else None

    per_scorer: dict[str, list[dict]] = {sc: [] for sc in ctx.config.scorers}
    for _ in range(config.repeats):
        candidates = sample_specs(config.space, config.s, rng, **kw)
        records = _score_many(candidates, ctx, gamma, config.seed_weights, cache)
        for scorer, recs in records.items():
            xs, ys = [], []
            n_degenerate = 0
            for rec in recs:
                if rec.spec_id not in reference:
                    raise JoinMiss(f"spec_id {rec.spec_id!r} missing from reference table")
                if is_degenerate(rec.score):
                    n_degenerate += 1
                    continue
                xs.append(rec.score)
                ys.append(reference[rec.spec_id])
            series = (np.array(xs), np.array(ys))
            per_scorer[scorer].append({
                "pearson": pearson(series),
                "kendall_tau_b": kendall_tau_b(series),
                "n_used": len(xs),
                "n_degenerate": n_degenerate,
            })

    report: dict = {"study": "correlation", "repeats": config.repeats,
                    "gamma": gamma.as_dict() if gamma else None}
    for scorer, runs in per_scorer.items():
        report[scorer] = {
            "pearson": float(np.mean([r["pearson"] for r in runs])),
            "kendall_tau_b": float(np.mean([r["kendall_tau_b"] for r in runs])),
            "n_used": runs[-1]["n_used"],
            "n_degenerate": runs[-1]["n_degenerate"],
            "per_repeat": runs,
        }
    return report


# --------------------------------------------------------------------------
# bandwidth sensitivity sweep
# --------------------------------------------------------------------------

def run_gamma_sweep(config: ExperimentConfig, epsilons=(0.01, 0.1, 1.0 / np.e)) -> dict:
    """Score candidates under width-calibrated bandwidths for several epsilon.

    For each epsilon the bandwidth is derived from the first probe network's
    normalized trace rows (kernel value at the farthest pair == epsilon) and
    the resulting ranking is compared to the detected-bandwidth ranking.
    """
    ctx = _prepare(config)
    if "rbflex" not in ctx.config.scorers:
        raise ConfigError("gamma sweep applies to the rbflex scorer")
    rng = np.random.default_rng(config.seed_sampler)
    kw = config.space_kwargs()
    probes = sample_specs(config.space, config.m, rng, **kw)
    candidates = sample_specs(config.space, config.s, rng, **kw)

    probe_traces = [_trace_for(p, ctx, _weight_seed(config.seed_weights, spec_id(p)))
                    for p in probes]
    detected = detect_gammas([TraceMatrices(x=normalize_columns(t.x), y=normalize_columns(t.y))
                              for t in probe_traces])
    base_records = _score_many(candidates, ctx, detected, config.seed_weights, None)["rbflex"]
    base_scores = {r.spec_id: r.score for r in base_records}
    sids = sorted(base_scores)

    ref_rows_x = normalize_columns(probe_traces[0].x)
    ref_rows_y = normalize_columns(probe_traces[0].y)

    sweep = []
    for eps in epsilons:
        gamma = GammaPair(gamma_k=epsilon_width_gamma(ref_rows_x, eps),
                          gamma_q=epsilon_width_gamma(ref_rows_y, eps),
                          n_candidates_k=0, n_candidates_q=0, fallback_used=False)
        recs = _score_many(candidates, ctx, gamma, config.seed_weights, None)["rbflex"]
        scores = {r.spec_id: r.score for r in recs}
        common = [sid for sid in sids
                  if not is_degenerate(scores[sid]) and not is_degenerate(base_scores[sid])]
        tau = kendall_tau_b((np.array([scores[s] for s in common]),
                             np.array([base_scores[s] for s in common])))
        sweep.append({"epsilon": float(eps), "gamma_k": gamma.gamma_k,
                      "gamma_q": gamma.gamma_q, "kendall_vs_detected": tau,
                      "scores": scores})

    return {"study": "gamma_sweep", "detected": detected.as_dict(), "sweep": sweep}
