"""Evolutionary search over partition leaves against a tabular benchmark.

Fitness is the benchmark's validation accuracy; every individual lives inside
one partition leaf, and variation operators (single-point crossover, per-layer
mutation) are repaired so offspring stay inside the first parent's leaf. The
whole run is driven by one seeded generator, so equal configurations produce
byte-identical histories.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CoverageGapError,
    DuplicateEncodingError,
    ParseError,
    SpecMismatchError,
)
from .space import SpaceSpec, SubSupernet, contains, format_encoding, parse_encoding

# Top individuals copied unchanged into the next generation.
ELITE_COUNT = 1

BENCH_HEADER = ("encoding", "val_acc", "test_acc")
HISTORY_HEADER = ("epoch", "mean_val", "std_val", "best_val", "best_encoding")


@dataclass(frozen=True)
class BenchRecord:
    val_acc: float
    test_acc: float


@dataclass(frozen=True)
class TabularBenchmark:
    """Accuracy table over a space's architectures, the search's fitness oracle."""

    space: SpaceSpec
    records: dict[tuple[int, ...], BenchRecord]

    def __len__(self) -> int:
        return len(self.records)

    def _get(self, encoding: tuple[int, ...]) -> BenchRecord:
        rec = self.records.get(tuple(encoding))
        if rec is None:
            raise CoverageGapError(
                f"benchmark has no record for {format_encoding(encoding)}"
            )
        return rec

    def val(self, encoding) -> float:
        return self._get(encoding).val_acc

    def test(self, encoding) -> float:
        return self._get(encoding).test_acc


def load_benchmark(path, spec: SpaceSpec) -> TabularBenchmark:
    """Read an ``encoding,val_acc,test_acc`` table, validating every row."""
    records: dict[tuple[int, ...], BenchRecord] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty benchmark file") from None
        if tuple(h.strip() for h in header) != BENCH_HEADER:
            raise ParseError(
                f"{path}: header {header!r} != {','.join(BENCH_HEADER)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            encoding = parse_encoding(row[0], spec)
            try:
                val_acc = float(row[1])
                test_acc = float(row[2])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric accuracy") from None
            for acc in (val_acc, test_acc):
                if not 0.0 <= acc <= 100.0:
                    raise ParseError(f"{path}:{lineno}: accuracy {acc} outside [0, 100]")
            if encoding in records:
                raise DuplicateEncodingError(
                    f"{path}:{lineno}: encoding {row[0]} appears twice"
                )
            records[encoding] = BenchRecord(val_acc=val_acc, test_acc=test_acc)
    return TabularBenchmark(space=spec, records=records)


def write_benchmark_csv(bench: TabularBenchmark, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCH_HEADER)
        for encoding, rec in bench.records.items():
            writer.writerow([format_encoding(encoding), repr(rec.val_acc), repr(rec.test_acc)])


@dataclass(frozen=True)
class EvoConfig:
    population_size: int = 50
    epochs: int = 50
    mutation_rate: float = 0.1
    crossover_rate: float = 0.9
    seed: int = 0
    tournament_size: int = 5

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError(f"population_size must be >= 2, got {self.population_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        for name in ("mutation_rate", "crossover_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {rate}")
        if self.tournament_size < 1:
            raise ValueError(f"tournament_size must be >= 1, got {self.tournament_size}")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    mean_val: float
    std_val: float
    best_val: float
    best_encoding: tuple[int, ...]


@dataclass
class SearchHistory:
    """Per-epoch population statistics plus the retained populations."""

    epochs: list[EpochStats] = field(default_factory=list)
    populations: list[list[tuple[int, ...]]] = field(default_factory=list)

    @property
    def final_best(self) -> EpochStats:
        if not self.epochs:
            raise ValueError("history is empty")
        return self.epochs[-1]


def _check_leaves(leaves: list[SubSupernet]) -> SpaceSpec:
    if not leaves:
        raise ValueError("need at least one partition leaf")
    space = leaves[0].space
    for leaf in leaves[1:]:
        if leaf.space != space:
            raise SpecMismatchError("partition leaves disagree on the space")
    for i in range(len(leaves)):
        for j in range(i + 1, len(leaves)):
            overlap = all(
                any(a & b for a, b in zip(leaves[i].masks[l].bits, leaves[j].masks[l].bits))
                for l in range(space.num_layers)
            )
            if overlap:
                raise ValueError(f"leaves {i} and {j} overlap")
    covered = sum(
        int(np.prod([m.count for m in leaf.masks], dtype=np.int64)) for leaf in leaves
    )
    if covered != space.total_subnets():
        raise ValueError(
            f"leaves cover {covered} of {space.total_subnets()} architectures"
        )
    return space


def _sample_in_leaf(rng: np.random.Generator, leaf: SubSupernet) -> tuple[int, ...]:
    encoding = []
    for mask in leaf.masks:
        active = mask.active()
        encoding.append(active[int(rng.integers(0, len(active)))])
    return tuple(encoding)


def _tournament(rng, population, fitness, size: int) -> int:
    picks = rng.integers(0, len(population), size=size)
    best = int(picks[0])
    for p in picks[1:]:
        if fitness[int(p)] > fitness[best]:
            best = int(p)
    return best


def evolve(
    leaves: list[SubSupernet],
    bench: TabularBenchmark,
    cfg: EvoConfig,
    initial_population: list[tuple[int, ...]] | None = None,
) -> SearchHistory:
    """Run the seeded generational loop and record per-epoch statistics.

    Epoch 0 records the initial population (uniform across leaves unless
    ``initial_population`` pins it); each later epoch keeps the elite and
    refills via tournament selection, optional single-point crossover, and
    per-layer mutation resampled within the first parent's leaf mask, so
    every individual stays inside exactly one leaf. Best-so-far advances
    only on strict validation improvement, so earlier discoveries win ties.
    """
    space = _check_leaves(leaves)
    if bench.space != space:
        raise SpecMismatchError("benchmark is bound to a different space")
    if len(bench) < space.total_subnets():
        raise CoverageGapError(
            f"benchmark covers {len(bench)} of {space.total_subnets()} architectures"
        )
    rng = np.random.default_rng(cfg.seed)
    L = space.num_layers

    def leaf_of(encoding: tuple[int, ...]) -> int:
        for li, leaf in enumerate(leaves):
            if contains(leaf, encoding):
                return li
        raise ValueError(f"{format_encoding(encoding)} is outside every leaf")

    population: list[tuple[int, ...]] = []
    member_leaf: list[int] = []
    if initial_population is not None:
        if len(initial_population) != cfg.population_size:
            raise ValueError(
                f"initial population has {len(initial_population)} members, "
                f"config says {cfg.population_size}"
            )
        for enc in initial_population:
            enc = tuple(int(c) for c in enc)
            member_leaf.append(leaf_of(enc))
            population.append(enc)
    else:
        per_leaf = cfg.population_size // len(leaves)
        remainder = cfg.population_size % len(leaves)
        for li, leaf in enumerate(leaves):
            quota = per_leaf + (1 if li < remainder else 0)
            for _ in range(quota):
                population.append(_sample_in_leaf(rng, leaf))
                member_leaf.append(li)

    history = SearchHistory()
    best_val = -np.inf
    best_enc: tuple[int, ...] | None = None

    def record(epoch: int) -> None:
        nonlocal best_val, best_enc
        vals = [bench.val(enc) for enc in population]
        for enc, v in zip(population, vals):
            if v > best_val:
                best_val = v
                best_enc = enc
        history.epochs.append(
            EpochStats(
                epoch=epoch,
                mean_val=float(np.mean(vals)),
                std_val=float(np.std(vals)),
                best_val=float(best_val),
                best_encoding=best_enc,
            )
        )
        history.populations.append(list(population))

    record(0)
    for epoch in range(1, cfg.epochs + 1):
        fitness = [bench.val(enc) for enc in population]
        elite_order = sorted(range(len(population)), key=lambda i: (-fitness[i], i))
        next_population = [population[i] for i in elite_order[:ELITE_COUNT]]
        next_leaves = [member_leaf[i] for i in elite_order[:ELITE_COUNT]]
        while len(next_population) < cfg.population_size:
            p1 = _tournament(rng, population, fitness, cfg.tournament_size)
            child = list(population[p1])
            leaf = leaves[member_leaf[p1]]
            if rng.random() < cfg.crossover_rate and L > 1:
                p2 = _tournament(rng, population, fitness, cfg.tournament_size)
                cut = int(rng.integers(1, L))
                child = list(population[p1][:cut]) + list(population[p2][cut:])
                for l in range(L):  # project back onto the first parent's leaf
                    if not leaf.masks[l].bits[child[l]]:
                        active = leaf.masks[l].active()
                        child[l] = active[int(rng.integers(0, len(active)))]
            for l in range(L):
                if rng.random() < cfg.mutation_rate:
                    active = leaf.masks[l].active()
                    child[l] = active[int(rng.integers(0, len(active)))]
            next_population.append(tuple(child))
            next_leaves.append(member_leaf[p1])
        population = next_population
        member_leaf = next_leaves
        record(epoch)
    return history


def best_architecture(
    history: SearchHistory, bench: TabularBenchmark
) -> tuple[tuple[int, ...], float]:
    """Final best-so-far encoding and its test accuracy from the table."""
    final = history.final_best
    return final.best_encoding, bench.test(final.best_encoding)


def write_history_csv(history: SearchHistory, path) -> None:
    """Emit ``epoch,mean_val,std_val,best_val,best_encoding`` rows."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_HEADER)
        for row in history.epochs:
            writer.writerow(
                [
                    row.epoch,
                    repr(row.mean_val),
                    repr(row.std_val),
                    repr(row.best_val),
                    format_encoding(row.best_encoding),
                ]
            )


def read_history_csv(path) -> list[dict]:
    """Parse a history file back into row dictionaries (numbers as floats)."""
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != HISTORY_HEADER:
            raise ParseError(f"{path}: header {header!r} != {','.join(HISTORY_HEADER)!r}")
        for row in reader:
            rows.append(
                {
                    "epoch": int(row[0]),
                    "mean_val": float(row[1]),
                    "std_val": float(row[2]),
                    "best_val": float(row[3]),
                    "best_encoding": row[4],
                }
            )
    return rows
