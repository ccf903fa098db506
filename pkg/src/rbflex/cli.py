"""Command-line interface.

Subcommands mirror the experiment protocols: `score`/`search` run the
probe-detect-score pipeline (search additionally reports the top-1 network),
`robust-init`, `robust-batchsize` and `robust-imagebatch` run the robustness
studies, `correlate` joins scores against a reference accuracy CSV, and
`gamma-sweep` runs the bandwidth sensitivity sweep.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 every candidate
scored degenerate.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .errors import AllDegenerate, ConfigError, DataError, RBFleXError
from .harness import (
    ExperimentConfig,
    load_reference_csv,
    run_batchsize_robustness,
    run_correlation,
    run_gamma_sweep,
    run_imagebatch_robustness,
    run_init_robustness,
    run_search,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DEGENERATE = 4


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--space", choices=["cell", "act"], default="cell")
    p.add_argument("--data", default=None,
                   help="directory of .bin files, a single .bin file, or 'synthetic' "
                        "(default: $RBFLEX_DATA_DIR, else synthetic)")
    p.add_argument("--n", type=int, default=16, help="minibatch size")
    p.add_argument("--m", type=int, default=10, help="probe networks for bandwidth detection")
    p.add_argument("--s", type=int, default=100, help="candidates to score")
    p.add_argument("--seed-weights", type=int, default=0)
    p.add_argument("--seed-batch", type=int, default=0)
    p.add_argument("--seed-sampler", type=int, default=0)
    p.add_argument("--scorer", choices=["rbflex", "naswot", "both"], default="rbflex")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--cache", default=None, help="append-only score cache file")
    p.add_argument("--stem-channels", type=int, default=32)
    p.add_argument("--num-cells", type=int, default=1)
    p.add_argument("--num-classes", type=int, default=10)
    p.add_argument("--synth-count", type=int, default=128)
    p.add_argument("--synth-size", type=int, default=None,
                   help="synthetic image side (default 16 for cell, 32 for act)")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--workers", type=int, default=1,
                   help="candidate-scoring threads (results are identical at any count)")


def _config(args) -> ExperimentConfig:
    return ExperimentConfig(
        space=args.space, scorer=args.scorer, n=args.n, m=args.m, s=args.s,
        seed_weights=args.seed_weights, seed_batch=args.seed_batch,
        seed_sampler=args.seed_sampler, data=args.data, out_dir=args.out,
        cache_path=args.cache, stem_channels=args.stem_channels,
        num_cells=args.num_cells, num_classes=args.num_classes,
        synth_count=args.synth_count, synth_size=args.synth_size,
        repeats=args.repeats, workers=args.workers,
    ).validate()


def _jsonsafe(obj):
    """Replace degenerate -inf scores with their CSV label for strict JSON."""
    if isinstance(obj, dict):
        return {k: _jsonsafe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonsafe(v) for v in obj]
    if isinstance(obj, float) and obj == float("-inf"):
        return "DEGENERATE"
    return obj


def _emit(report: dict, out: str | None, name: str) -> None:
    text = json.dumps(_jsonsafe(report), sort_keys=True, indent=2)
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / name).write_text(text + "\n")
    print(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rbflex",
                                     description="Training-free network scoring")
    sub = parser.add_subparsers(dest="command", required=True)

    for cmd, extra in (("score", "score candidates and emit CSVs"),
                       ("search", "score candidates and report the top-1 network")):
        p = sub.add_parser(cmd, help=extra)
        _add_common(p)

    p = sub.add_parser("robust-init", help="score spread across weight initializations")
    _add_common(p)
    p.add_argument("--inits", type=int, default=10)

    p = sub.add_parser("robust-batchsize", help="ranking agreement across minibatch sizes")
    _add_common(p)
    p.add_argument("--sizes", default="4,8,16,32", help="comma-separated minibatch sizes")

    p = sub.add_parser("robust-imagebatch", help="score spread across image batches")
    _add_common(p)
    p.add_argument("--batches", type=int, default=10)

    p = sub.add_parser("correlate", help="correlate scores against reference accuracies")
    _add_common(p)
    p.add_argument("--reference", required=True, help="CSV with header spec_id,accuracy")

    p = sub.add_parser("gamma-sweep", help="bandwidth sensitivity sweep")
    _add_common(p)
    p.add_argument("--epsilons", default="0.01,0.1,0.3678794411714423",
                   help="comma-separated kernel floor values in (0, 1)")

    return parser


def _run(args) -> int:
    config = _config(args)
    if args.command in ("score", "search"):
        result = run_search(config)
        for scorer, sid in result.top1.items():
            print(f"top-1[{scorer}]: {sid}")
        if config.out_dir:
            print(f"wrote {config.out_dir}/manifest.json")
        elif args.command == "score":
            writer = csv.writer(sys.stdout, lineterminator="\n")
            for scorer, recs in result.records.items():
                for rec in recs:
                    writer.writerow(rec.csv_row())
        return EXIT_OK
    if args.command == "robust-init":
        _emit(run_init_robustness(config, n_inits=args.inits), config.out_dir,
              "robust_init.json")
        return EXIT_OK
    if args.command == "robust-batchsize":
        sizes = [int(v) for v in args.sizes.split(",") if v]
        _emit(run_batchsize_robustness(config, sizes=sizes), config.out_dir,
              "robust_batchsize.json")
        return EXIT_OK
    if args.command == "robust-imagebatch":
        _emit(run_imagebatch_robustness(config, n_batches=args.batches), config.out_dir,
              "robust_imagebatch.json")
        return EXIT_OK
    if args.command == "correlate":
        reference = load_reference_csv(args.reference)
        _emit(run_correlation(config, reference), config.out_dir, "correlation.json")
        return EXIT_OK
    if args.command == "gamma-sweep":
        epsilons = [float(v) for v in args.epsilons.split(",") if v]
        _emit(run_gamma_sweep(config, epsilons=epsilons), config.out_dir,
              "gamma_sweep.json")
        return EXIT_OK
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except AllDegenerate as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RBFleXError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
