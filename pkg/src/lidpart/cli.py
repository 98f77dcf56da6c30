"""Command-line pipeline runner.

Every subcommand is driven by one JSON config (see ``--help`` for the
schema and defaults), writes its reports and figures under the configured
output directory, and prints a one-line summary. Exit codes: 0 success,
1 usage error, 2 data or validation error. Timestamps only ever land in
the ``run_meta.json`` sidecar, so reruns with one config are byte-identical
everywhere else.
"""
from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import (
    ESTIMATE_STREAM,
    SAMPLING_STREAM,
    RunConfig,
    component_seed,
    load_run_config,
)
from .errors import ConfigError, LidPartError
from .evolution import (
    best_architecture,
    evolve,
    load_benchmark,
    write_history_csv,
)
from .lid import layer_lid, synth_manifold
from .metrics import correlation_report, emit_profile_csv
from .partition import (
    evaluate_split,
    run_partition,
    separability_score,
    sub_supernet_lid_profile,
)
from .reports import (
    render_gamma_figure,
    render_history_figure,
    render_profile_figure,
    render_rank_figure,
    render_separability_figure,
    write_json,
    write_partition_report,
    write_separability_csv,
)
from .space import OpMask, SubSupernet, format_encoding
from .tensorio import read_tensor

_EPILOG = """\
config schema (JSON, config_version 1; defaults in parentheses):
  seed        master seed, split per component (0)
  space       "nasbench201" or a path to a space JSON file
  provider    {"kind": "synthetic", "b" (128), "m" (32), "plan": {op: dim},
               "layer_plans": {layer: {op: dim}}, "seed" (derived)}
              or {"kind": "files", "manifest": path}
  k           neighbor count for LID estimation (20)
  measure     "euclidean" | "pearson" ("euclidean")
  degenerate  "error" | "clamp" on flat neighborhoods ("error")
  T           partition rounds, giving 2^T leaves (2)
  evo         {"population_size" (50), "epochs" (50), "mutation_rate" (0.1),
               "crossover_rate" (0.9), "tournament_size" (5)}
  benchmark   path to an encoding,val_acc,test_acc table
  estimate    {"d" (5), "m" (100), "n" (2000)} for lid-estimate
  profiles    {"count" (4)} for emit-profiles
  rank_eval   {"top_k" (50)}
  output_dir  report directory ("out")

Dotted --set overrides patch the config, e.g. --set T=3 --set evo.epochs=10.
LIDPART_THREADS caps worker threads (default: hardware concurrency).
"""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems must exit 1, not argparse's 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="lidpart",
        description="Supernet partitioning by layer-wise intrinsic dimension.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="subcommand")
    sub.required = True

    def add(name, help_text, handler):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="run config JSON")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config entry (dotted keys)",
        )
        p.set_defaults(handler=handler)
        return p

    p = add("lid-estimate", "estimate the LID of one batch", _cmd_lid_estimate)
    p.add_argument("--tensor", help="estimate a stored tensor instead of a synthetic batch")
    add("split", "partition the supernet for T rounds", _cmd_split)
    add("separability", "score every layer's candidate separability", _cmd_separability)
    add("evo-search", "partition, then evolutionary search on the benchmark", _cmd_evo_search)
    add("rank-eval", "rank correlation of validation vs. test accuracy", _cmd_rank_eval)
    add("emit-profiles", "sample architectures and emit their LID profiles", _cmd_emit_profiles)
    return parser


def _start(args) -> tuple[RunConfig, Path, str]:
    cfg = load_run_config(args.config, args.overrides)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out, datetime.now(timezone.utc).isoformat()


def _finish(out, command: str, args, started: str) -> None:
    write_json(
        {
            "command": command,
            "config": str(args.config),
            "overrides": list(args.overrides),
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(),
        },
        out / "run_meta.json",
    )


def _cmd_lid_estimate(args) -> int:
    cfg, out, started = _start(args)
    if getattr(args, "tensor", None):
        batch = np.asarray(read_tensor(args.tensor), dtype=np.float64)
        est = layer_lid(batch, k=cfg.k, degenerate=cfg.degenerate)
        payload = {
            "source": "tensor",
            "path": str(args.tensor),
            "rows": int(batch.shape[0]),
            "k": cfg.k,
            "lid": est.value,
            "skipped_rows": est.skipped_rows,
        }
    else:
        if cfg.estimate is None:
            raise ConfigError("lid-estimate needs an 'estimate' section or --tensor")
        e = cfg.estimate
        batch = synth_manifold(e.d, e.m, e.n, component_seed(cfg.seed, ESTIMATE_STREAM))
        est = layer_lid(batch, k=cfg.k, degenerate=cfg.degenerate)
        payload = {
            "source": "synthetic",
            "d": e.d,
            "m": e.m,
            "n": e.n,
            "k": cfg.k,
            "lid": est.value,
            "skipped_rows": est.skipped_rows,
        }
    write_json(payload, out / "lid_estimate.json")
    _finish(out, "lid-estimate", args, started)
    print(f"lid-estimate: lid={payload['lid']:.4f} (k={cfg.k}) -> {out / 'lid_estimate.json'}")
    return 0


def _cmd_split(args) -> int:
    cfg, out, started = _start(args)
    space = cfg.space()
    source = cfg.source(space)
    tree = run_partition(
        SubSupernet.full(space),
        cfg.T,
        source,
        k=cfg.k,
        measure=cfg.measure,
        degenerate=cfg.degenerate,
    )
    write_partition_report(tree, out / "partition.json")
    render_gamma_figure(tree, out / "partition_gamma.png")
    _finish(out, "split", args, started)
    print(f"split: T={cfg.T} leaves={len(tree.leaves())} -> {out / 'partition.json'}")
    return 0


def _cmd_separability(args) -> int:
    cfg, out, started = _start(args)
    space = cfg.space()
    source = cfg.source(space)
    decision = evaluate_split(
        SubSupernet.full(space),
        source,
        k=cfg.k,
        measure=cfg.measure,
        degenerate=cfg.degenerate,
    )
    rows = [
        (space.layers[l].name, separability_score(decision.matrices[l]))
        for l in sorted(decision.matrices)
    ]
    write_separability_csv(rows, out / "separability.csv")
    render_separability_figure(rows, out / "separability.png")
    _finish(out, "separability", args, started)
    print(f"separability: {len(rows)} layers -> {out / 'separability.csv'}")
    return 0


def _cmd_evo_search(args) -> int:
    cfg, out, started = _start(args)
    if cfg.benchmark is None:
        raise ConfigError("evo-search needs a 'benchmark' path")
    space = cfg.space()
    source = cfg.source(space)
    tree = run_partition(
        SubSupernet.full(space),
        cfg.T,
        source,
        k=cfg.k,
        measure=cfg.measure,
        degenerate=cfg.degenerate,
    )
    bench = load_benchmark(cfg.benchmark, space)
    history = evolve(tree.leaves(), bench, cfg.evo)
    write_history_csv(history, out / "history.csv")
    render_history_figure(history, out / "history.png")
    encoding, test_acc = best_architecture(history, bench)
    write_json(
        {
            "best_encoding": format_encoding(encoding),
            "val_acc": history.final_best.best_val,
            "test_acc": test_acc,
            "epochs": cfg.evo.epochs,
            "leaves": len(tree.leaves()),
        },
        out / "search_result.json",
    )
    _finish(out, "evo-search", args, started)
    print(
        f"evo-search: best {format_encoding(encoding)} "
        f"val={history.final_best.best_val:.3f} test={test_acc:.3f} -> {out / 'history.csv'}"
    )
    return 0


def _cmd_rank_eval(args) -> int:
    cfg, out, started = _start(args)
    if cfg.benchmark is None:
        raise ConfigError("rank-eval needs a 'benchmark' path")
    space = cfg.space()
    bench = load_benchmark(cfg.benchmark, space)
    ranked = sorted(bench.records.items(), key=lambda kv: (-kv[1].test_acc, kv[0]))
    top = ranked[: cfg.top_k]
    true_scores = [rec.test_acc for _, rec in top]
    proxy_scores = [rec.val_acc for _, rec in top]
    report = correlation_report(proxy_scores, true_scores)
    write_json(report, out / "rank_correlation.json")
    render_rank_figure(true_scores, proxy_scores, out / "rank_scatter.png")
    _finish(out, "rank-eval", args, started)
    print(
        f"rank-eval: n={report['n']} kendall={report['kendall']:.4f} "
        f"spearman={report['spearman']:.4f} -> {out / 'rank_correlation.json'}"
    )
    return 0


def _cmd_emit_profiles(args) -> int:
    cfg, out, started = _start(args)
    space = cfg.space()
    source = cfg.source(space)
    if cfg.profiles_count > space.total_subnets():
        raise ConfigError(
            f"profiles.count {cfg.profiles_count} exceeds the space's "
            f"{space.total_subnets()} architectures"
        )
    rng = np.random.default_rng(component_seed(cfg.seed, SAMPLING_STREAM))
    chosen: list[tuple[int, ...]] = []
    seen = set()
    while len(chosen) < cfg.profiles_count:
        encoding = tuple(
            int(rng.integers(0, space.op_count(l))) for l in range(space.num_layers)
        )
        if encoding not in seen:
            seen.add(encoding)
            chosen.append(encoding)
    profiles = []
    for encoding in chosen:
        sub = SubSupernet(
            space=space,
            masks=tuple(
                OpMask.singleton(c, space.op_count(l)) for l, c in enumerate(encoding)
            ),
        )
        profile = sub_supernet_lid_profile(
            source, sub, k=cfg.k, degenerate=cfg.degenerate
        )
        profiles.append((format_encoding(encoding), profile))
    emit_profile_csv(profiles, out / "profiles.csv")
    render_profile_figure(profiles, out / "profiles.png")
    _finish(out, "emit-profiles", args, started)
    print(f"emit-profiles: {len(profiles)} architectures -> {out / 'profiles.csv'}")
    return 0


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return 0 if exc.code in (None, 0) else int(exc.code)
    try:
        return args.handler(args)
    except LidPartError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(run_cli())
