"""Dimension profiles, similarity, and recursive sub-supernet bipartition.

A sub-supernet's profile is the length-L vector of per-layer LID estimates of
its composed layer outputs. Candidate operations at one layer are compared by
the similarity of their singleton profiles; the balanced bipartition that
maximizes summed intra-group similarity decides how the layer splits; and the
driver repeats that split for T rounds, growing a binary tree with 2^T leaf
sub-supernets.

Profiles are plain float64 vectors and similarity matrices plain ``n x n``
float64 arrays; the diagonal of a similarity matrix is fixed at 0 and ignored
by every consumer.
"""
from __future__ import annotations

import itertools
import math
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConfigError,
    ConstantProfileError,
    LengthMismatchError,
    LidPartError,
    NoSplittableLayerError,
    TooManyOpsError,
)
from .lid import DEFAULT_K, LID_MAX, layer_lid
from .providers import ReprSource
from .space import OpMask, SubSupernet, merge_group, split_layer

# Additive floor keeping the reciprocal-distance similarity finite.
EPSILON = 1.0e-6
# Exhaustive balanced-subset enumeration is exact but exponential; spaces of
# interest keep the per-layer op count far below this.
MAX_BIPARTITION_OPS = 20


def lid_similarity(a, b, measure: str = "euclidean") -> float:
    """Similarity of two dimension profiles.

    ``euclidean`` is the reciprocal distance ``1 / (||a - b|| + eps)`` —
    scale-sensitive, always positive. ``pearson`` is the sample correlation
    coefficient — scale-free, undefined for a constant profile.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise LengthMismatchError(f"profile lengths differ: {a.size} vs {b.size}")
    if measure == "euclidean":
        return float(1.0 / (np.linalg.norm(a - b) + EPSILON))
    if measure == "pearson":
        x = a - a.mean()
        y = b - b.mean()
        sx = float(np.dot(x, x))
        sy = float(np.dot(y, y))
        if sx == 0.0 or sy == 0.0:
            raise ConstantProfileError(
                "constant profile has no defined correlation"
            )
        return float(np.dot(x, y) / math.sqrt(sx * sy))
    raise ValueError(f"unknown measure {measure!r}")


def similarity_matrix(profiles: Sequence, measure: str = "euclidean") -> np.ndarray:
    """Pairwise profile similarities; symmetric, zero diagonal."""
    if len(profiles) < 2:
        raise ValueError(f"need at least 2 profiles, got {len(profiles)}")
    n = len(profiles)
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            try:
                s = lid_similarity(profiles[i], profiles[j], measure)
            except LidPartError as exc:
                raise type(exc)(f"pair ({i}, {j}): {exc}") from exc
            out[i, j] = s
            out[j, i] = s
    return out


@dataclass(frozen=True)
class PartitionResult:
    """A balanced operation bipartition: the group, its score, its layer."""

    group: tuple[int, ...]
    score: float
    layer: int = -1


def _as_square(S) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"similarity matrix must be square, got shape {S.shape}")
    return S


def _intra_sum(S: np.ndarray, group: tuple[int, ...]) -> float:
    return math.fsum(S[i, j] for i, j in itertools.combinations(group, 2))


def best_balanced_bipartition(S) -> PartitionResult:
    """Exhaustively maximize summed intra-group similarity over balanced splits.

    Considers every subset with floor(n/2) <= size <= ceil(n/2); the score of
    a split is the sum over unordered intra pairs of both groups. Exact ties
    go to the lexicographically smallest group.
    """
    S = _as_square(S)
    n = S.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 ops to bipartition, got {n}")
    if n > MAX_BIPARTITION_OPS:
        raise TooManyOpsError(
            f"{n} ops exceed the exhaustive enumeration bound ({MAX_BIPARTITION_OPS})"
        )
    best_gamma = -math.inf
    best_group: tuple[int, ...] = ()
    for size in range(n // 2, (n + 1) // 2 + 1):
        for group in itertools.combinations(range(n), size):
            members = set(group)
            comp = tuple(i for i in range(n) if i not in members)
            gamma = _intra_sum(S, group) + _intra_sum(S, comp)
            if gamma > best_gamma or (gamma == best_gamma and group < best_group):
                best_gamma = gamma
                best_group = group
    return PartitionResult(group=best_group, score=best_gamma)


def separability_score(S) -> float:
    """Spread of the off-diagonal similarities, normalized by 1/(2n).

    Both the mean and the second moment run over all ordered pairs i != j
    but divide by 2n rather than the pair count, so an all-equal matrix
    scores zero only at n = 3. Higher means the candidates are easier to
    tell apart.
    """
    S = _as_square(S)
    n = S.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 ops, got {n}")
    off = [S[i, j] for i in range(n) for j in range(n) if i != j]
    s_bar = math.fsum(off) / (2.0 * n)
    spread = math.fsum((s - s_bar) ** 2 for s in off) / (2.0 * n)
    return math.sqrt(spread)


def sub_supernet_lid_profile(
    source: ReprSource,
    sub: SubSupernet,
    k: int = DEFAULT_K,
    degenerate: str = "error",
    lid_max: float = LID_MAX,
) -> np.ndarray:
    """Per-layer LID estimates of the sub-supernet's composed outputs."""
    profile = np.empty(sub.space.num_layers, dtype=np.float64)
    for l in range(sub.space.num_layers):
        try:
            z = source(sub, l)
            profile[l] = layer_lid(z, k=k, degenerate=degenerate, lid_max=lid_max).value
        except LidPartError as exc:
            raise type(exc)(f"layer {l}: {exc}") from exc
    return profile


def _worker_count(tasks: int) -> int:
    raw = os.environ.get("LIDPART_THREADS")
    if raw is None:
        cap = os.cpu_count() or 1
    else:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"LIDPART_THREADS={raw!r} is not an integer") from None
        if cap < 1:
            raise ConfigError(f"LIDPART_THREADS must be >= 1, got {cap}")
    return max(1, min(cap, tasks))


@dataclass(frozen=True)
class SplitDecision:
    """Everything produced while choosing where and how to split one node."""

    layer: int
    result: PartitionResult
    children: tuple[SubSupernet, SubSupernet]
    layer_results: dict[int, PartitionResult]
    matrices: dict[int, np.ndarray]
    profiles: dict[int, np.ndarray]


def evaluate_split(
    sub: SubSupernet,
    source: ReprSource,
    k: int = DEFAULT_K,
    measure: str = "euclidean",
    degenerate: str = "error",
    lid_max: float = LID_MAX,
) -> SplitDecision:
    """Score every unpartitioned layer and bipartition the best one.

    For each full-mask layer the layer's candidate ops get singleton
    profiles, a similarity matrix, and a balanced bipartition; the layer
    with the highest score wins (ties to the lowest index) and its two op
    groups become the child sub-supernets.

    Since a layer's composed output depends only on that layer's own mask,
    per-layer estimates are cached by (layer, mask) and shared across
    candidates; layers may be evaluated concurrently (``LIDPART_THREADS``
    caps the pool).
    """
    L = sub.space.num_layers
    open_layers = [l for l in range(L) if sub.masks[l].is_full()]
    if not open_layers:
        raise NoSplittableLayerError(
            f"sub-supernet {sub.id} has no unpartitioned layer left"
        )

    cache: dict[tuple[int, tuple[int, ...]], float] = {}
    lock = threading.Lock()

    def entry(layer: int, mask: OpMask) -> float:
        key = (layer, mask.bits)
        with lock:
            hit = cache.get(key)
        if hit is None:
            try:
                z = source(sub.with_mask(layer, mask), layer)
                hit = layer_lid(z, k=k, degenerate=degenerate, lid_max=lid_max).value
            except LidPartError as exc:
                raise type(exc)(f"layer {layer}: {exc}") from exc
            with lock:
                hit = cache.setdefault(key, hit)
        return hit

    def eval_layer(layer: int):
        candidates = split_layer(sub, layer)
        profiles = np.empty((len(candidates), L), dtype=np.float64)
        for ci, cand in enumerate(candidates):
            for l in range(L):
                profiles[ci, l] = entry(l, cand.masks[l])
        try:
            S = similarity_matrix(list(profiles), measure)
            result = replace(best_balanced_bipartition(S), layer=layer)
        except LidPartError as exc:
            raise type(exc)(f"layer {layer}: {exc}") from exc
        return candidates, profiles, S, result

    workers = _worker_count(len(open_layers))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            evaluated = list(pool.map(eval_layer, open_layers))
    else:
        evaluated = [eval_layer(l) for l in open_layers]

    by_layer = dict(zip(open_layers, evaluated))
    best_layer = open_layers[0]
    for layer in open_layers[1:]:
        if by_layer[layer][3].score > by_layer[best_layer][3].score:
            best_layer = layer
    candidates, _, _, result = by_layer[best_layer]
    comp = tuple(i for i in range(len(candidates)) if i not in set(result.group))
    child_a = merge_group([candidates[i] for i in result.group], best_layer)
    child_b = merge_group([candidates[i] for i in comp], best_layer)
    return SplitDecision(
        layer=best_layer,
        result=result,
        children=(child_a, child_b),
        layer_results={l: by_layer[l][3] for l in open_layers},
        matrices={l: by_layer[l][2] for l in open_layers},
        profiles={l: by_layer[l][1] for l in open_layers},
    )


def split_supernet(
    sub: SubSupernet,
    source: ReprSource,
    k: int = DEFAULT_K,
    measure: str = "euclidean",
    degenerate: str = "error",
    lid_max: float = LID_MAX,
) -> tuple[SubSupernet, SubSupernet, int, float]:
    """Split on the best-scoring layer; returns (group child, rest child, layer, score)."""
    d = evaluate_split(sub, source, k=k, measure=measure, degenerate=degenerate, lid_max=lid_max)
    return d.children[0], d.children[1], d.layer, d.result.score


@dataclass
class PartitionHooks:
    """Training-side callbacks: warmup before each split, finetune on leaves."""

    warmup: Callable[[SubSupernet], None] | None = None
    finetune: Callable[[SubSupernet], None] | None = None


@dataclass
class PartitionNode:
    sub: SubSupernet
    depth: int
    decision: SplitDecision | None = None
    children: tuple["PartitionNode", "PartitionNode"] | None = None

    @property
    def is_leaf(self) -> bool:
        return self.children is None


@dataclass
class PartitionTree:
    root: PartitionNode
    rounds: int

    def _walk(self, node: PartitionNode):
        yield node
        if node.children is not None:
            for child in node.children:
                yield from self._walk(child)

    def nodes(self) -> list[PartitionNode]:
        return list(self._walk(self.root))

    def split_nodes(self) -> list[PartitionNode]:
        return [n for n in self._walk(self.root) if not n.is_leaf]

    def leaf_nodes(self) -> list[PartitionNode]:
        return [n for n in self._walk(self.root) if n.is_leaf]

    def leaves(self) -> list[SubSupernet]:
        return [n.sub for n in self.leaf_nodes()]


def _as_source_factory(source_factory) -> Callable[[SubSupernet], ReprSource]:
    if hasattr(source_factory, "batch"):  # a single source reused for all nodes
        return lambda sub: source_factory
    if callable(source_factory):
        return source_factory
    raise TypeError("source_factory must be a ReprSource or a sub -> ReprSource callable")


def run_partition(
    root: SubSupernet,
    T: int,
    source_factory,
    hooks: PartitionHooks | None = None,
    k: int = DEFAULT_K,
    measure: str = "euclidean",
    degenerate: str = "error",
    lid_max: float = LID_MAX,
) -> PartitionTree:
    """Split every current sub-supernet once per round, for T rounds.

    Produces a depth-T binary tree with 2^T leaves. ``source_factory`` is
    either one source shared by all nodes or a callable invoked per node
    (mirroring per-node warmup); ``hooks.warmup`` runs before each split and
    ``hooks.finetune`` once per final leaf.
    """
    if T < 0:
        raise ValueError(f"round count T must be >= 0, got {T}")
    hooks = hooks or PartitionHooks()
    factory = _as_source_factory(source_factory)
    root_node = PartitionNode(sub=root, depth=0)
    frontier = [root_node]
    for t in range(T):
        grown: list[PartitionNode] = []
        for node in frontier:
            if hooks.warmup is not None:
                hooks.warmup(node.sub)
            try:
                decision = evaluate_split(
                    node.sub,
                    factory(node.sub),
                    k=k,
                    measure=measure,
                    degenerate=degenerate,
                    lid_max=lid_max,
                )
            except LidPartError as exc:
                raise type(exc)(f"round {t + 1}, node {node.sub.id}: {exc}") from exc
            node.decision = decision
            node.children = (
                PartitionNode(sub=decision.children[0], depth=node.depth + 1),
                PartitionNode(sub=decision.children[1], depth=node.depth + 1),
            )
            grown.extend(node.children)
        frontier = grown
    if hooks.finetune is not None:
        for node in frontier:
            hooks.finetune(node.sub)
    return PartitionTree(root=root_node, rounds=T)
