"""Sources of composed layer representations.

A representation source is a callable ``source(sub, layer) -> (b, m) array``
returning the masked layer's composed output — the plain elementwise sum of
the active operations' batches. Two implementations ship here: synthetic
batches drawn from low-dimensional embedded Gaussians with a planned
per-operation intrinsic dimension, and batches read back from serialized
containers named by a manifest.
"""
from __future__ import annotations

import threading
from typing import Iterable, Mapping, Protocol, runtime_checkable

import numpy as np

from .errors import EmptyMaskError, InvalidPlanError, ShapeMismatchError
from .lid import embedded_gaussian
from .space import OpMask, SpaceSpec, SubSupernet
from .tensorio import load_manifest, read_tensor


@runtime_checkable
class ReprSource(Protocol):
    """Callable giving a sub-supernet layer's composed output batch.

    Implementations must be deterministic (identical ``(sub, layer)``
    queries return identical batches), keep ``batch`` constant across
    layers, and stay safe under concurrent read queries.
    """

    batch: int

    def __call__(self, sub: SubSupernet, layer: int) -> np.ndarray: ...


def compose_layer_output(op_outputs, mask: OpMask | Iterable[int]) -> np.ndarray:
    """Elementwise sum of the batches whose mask bit is set.

    Parameters
    ----------
    op_outputs : list of (b, m) arrays
        One output batch per candidate operation, all of one shape.
    mask : OpMask or bit sequence
        Selector over ``op_outputs``; must keep at least one bit set.
    """
    bits = tuple(mask.bits) if isinstance(mask, OpMask) else tuple(int(b) for b in mask)
    outputs = [np.asarray(o, dtype=np.float64) for o in op_outputs]
    if len(bits) != len(outputs):
        raise ShapeMismatchError(
            f"mask width {len(bits)} != {len(outputs)} operation outputs"
        )
    for i, out in enumerate(outputs[1:], start=1):
        if out.shape != outputs[0].shape:
            raise ShapeMismatchError(
                f"output {i} shape {out.shape} != output 0 shape {outputs[0].shape}"
            )
    active = [i for i, b in enumerate(bits) if b]
    if not active:
        raise EmptyMaskError("mask selects no operation")
    total = outputs[active[0]].copy()
    for i in active[1:]:
        total += outputs[i]
    return total


class _ComposingSource:
    """Shared (sub, layer) -> composed batch plumbing over per-op outputs."""

    batch: int

    def layer_output(self, layer: int, op: int) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, sub: SubSupernet, layer: int) -> np.ndarray:
        if not 0 <= layer < len(sub.masks):
            raise ValueError(f"layer {layer} outside 0..{len(sub.masks) - 1}")
        active = sub.masks[layer].active()
        outputs = [self.layer_output(layer, op) for op in active]
        return compose_layer_output(outputs, (1,) * len(outputs))


class SyntheticSource(_ComposingSource):
    """Deterministic per-(layer, op) batches from embedded Gaussians.

    Each (layer, op) pair owns an isolated random stream, so outputs do not
    depend on query order, and the plan fixes each pair's intrinsic
    dimension: ops planned at equal dimensions land on near-equal layer
    estimates, handing the partition a known ground truth.
    """

    def __init__(self, space: SpaceSpec, seed: int, b: int, m: int, dims):
        self.space = space
        self.seed = int(seed)
        self.batch = int(b)
        self.ambient = int(m)
        self.dims = tuple(tuple(int(d) for d in row) for row in dims)
        if len(self.dims) != space.num_layers:
            raise InvalidPlanError(
                f"plan covers {len(self.dims)} layers, space has {space.num_layers}"
            )
        for l, row in enumerate(self.dims):
            if len(row) != space.op_count(l):
                raise InvalidPlanError(
                    f"layer {l}: plan covers {len(row)} of {space.op_count(l)} ops"
                )
            for o, d in enumerate(row):
                if d < 1 or d > self.ambient:
                    raise InvalidPlanError(
                        f"layer {l} op {o}: target dimension {d} outside 1..{self.ambient}"
                    )
                if self.batch < d + 2:
                    raise InvalidPlanError(
                        f"layer {l} op {o}: batch {self.batch} < {d + 2} rows "
                        f"needed for dimension {d}"
                    )
        self._cache: dict[tuple[int, int], np.ndarray] = {}
        self._lock = threading.Lock()

    def layer_output(self, layer: int, op: int) -> np.ndarray:
        key = (layer, op)
        with self._lock:
            hit = self._cache.get(key)
        if hit is None:
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, layer, op]))
            hit = embedded_gaussian(rng, self.dims[layer][op], self.ambient, self.batch)
            with self._lock:
                hit = self._cache.setdefault(key, hit)
        return hit


def resolve_plan(space: SpaceSpec, profile_plan: Mapping) -> tuple[tuple[int, ...], ...]:
    """Expand a target-dimension plan to a full per-(layer, op) table.

    Keys may be operation names (applied at every layer carrying that op)
    or ``(layer_index, op_name)`` pairs, which take precedence.
    """
    table = []
    for l in range(space.num_layers):
        row = []
        for name in space.op_names(l):
            if (l, name) in profile_plan:
                row.append(int(profile_plan[(l, name)]))
            elif name in profile_plan:
                row.append(int(profile_plan[name]))
            else:
                raise InvalidPlanError(f"plan gives no target dimension for op {name!r}")
        table.append(tuple(row))
    return tuple(table)


def synthetic_source(
    spec: SpaceSpec, seed: int, b: int, m: int, profile_plan: Mapping
) -> SyntheticSource:
    """Build a synthetic source from a target-dimension plan (see resolve_plan)."""
    return SyntheticSource(spec, seed=seed, b=b, m=m, dims=resolve_plan(spec, profile_plan))


class FileSource(_ComposingSource):
    """Batches read back from containers listed in a manifest."""

    def __init__(self, manifest):
        self.manifest = manifest
        self.batch = manifest.batch
        self._cache: dict[tuple[int, int], np.ndarray] = {}
        self._lock = threading.Lock()

    def layer_output(self, layer: int, op: int) -> np.ndarray:
        key = (layer, op)
        with self._lock:
            hit = self._cache.get(key)
        if hit is None:
            arr = read_tensor(self.manifest.lookup(layer, op))
            if arr.ndim != 2:
                raise ShapeMismatchError(
                    f"layer {layer} op {op}: expected a 2-d batch, got shape {arr.shape}"
                )
            if arr.shape[0] != self.batch:
                raise ShapeMismatchError(
                    f"layer {layer} op {op}: {arr.shape[0]} rows, "
                    f"manifest promises {self.batch}"
                )
            hit = np.asarray(arr, dtype=np.float64)
            with self._lock:
                hit = self._cache.setdefault(key, hit)
        return hit


def file_source(manifest_path) -> FileSource:
    """Open a manifest and serve composed layer outputs from its containers."""
    return FileSource(load_manifest(manifest_path))
