"""Searchable-layer space model: op masks, sub-supernets, subnet enumeration.

A space is L layers, each with a named list of candidate operations. A
sub-supernet restricts each layer to a subset of its operations via a binary
mask; a subnet (concrete architecture) picks exactly one operation per layer
and is encoded as a dash-joined index string such as ``"0-3-1-2-4-4"``.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import (
    AlreadySplitError,
    EmptyMaskError,
    IncompatibleSubsError,
    SpecMismatchError,
    UnknownOpError,
)

# Candidate operations of the 4-node cell benchmark space, in canonical order.
NB201_OPS = ("None", "Skip-connection", "Conv-1x1", "Conv-3x3", "Avgpool-3x3")
# One searchable layer per DAG edge, named "target<-source".
NB201_EDGES = ("1<-0", "2<-0", "2<-1", "3<-0", "3<-1", "3<-2")


@dataclass(frozen=True)
class LayerSpec:
    name: str
    ops: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        if len(self.ops) < 2:
            raise ValueError(f"layer {self.name!r} needs >= 2 operations")
        if len(set(self.ops)) != len(self.ops):
            raise ValueError(f"layer {self.name!r} has duplicate operation names")


@dataclass(frozen=True)
class SpaceSpec:
    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if len(self.layers) < 1:
            raise ValueError("space needs at least one layer")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def op_count(self, layer: int) -> int:
        return len(self.layers[layer].ops)

    def op_names(self, layer: int) -> tuple[str, ...]:
        return self.layers[layer].ops

    def total_subnets(self) -> int:
        return math.prod(len(l.ops) for l in self.layers)

    def to_dict(self) -> dict:
        return {"layers": [{"name": l.name, "ops": list(l.ops)} for l in self.layers]}

    @classmethod
    def from_dict(cls, data: dict) -> "SpaceSpec":
        try:
            layers = tuple(
                LayerSpec(name=str(l["name"]), ops=tuple(str(o) for o in l["ops"]))
                for l in data["layers"]
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed space description: {exc}") from exc
        return cls(layers=layers)


def load_space(path) -> SpaceSpec:
    """Read a space description file ({"layers": [{"name", "ops"}, ...]})."""
    with open(path, "r", encoding="utf-8") as fh:
        return SpaceSpec.from_dict(json.load(fh))


def save_space(spec: SpaceSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")


def nasbench201_space() -> SpaceSpec:
    """The 6-edge x 5-op cell space (15,625 subnets)."""
    return SpaceSpec(layers=tuple(LayerSpec(name=e, ops=NB201_OPS) for e in NB201_EDGES))


# --- masks and sub-supernets ---------------------------------------------

@dataclass(frozen=True)
class OpMask:
    """Binary vector over one layer's candidate operations; >= 1 bit set."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        object.__setattr__(self, "bits", bits)
        if len(bits) == 0:
            raise ValueError("mask must cover at least one operation")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("mask bits must be 0 or 1")
        if not any(bits):
            raise EmptyMaskError("mask has no active operation")

    @classmethod
    def full(cls, n: int) -> "OpMask":
        return cls(bits=(1,) * n)

    @classmethod
    def singleton(cls, index: int, n: int) -> "OpMask":
        if not 0 <= index < n:
            raise ValueError(f"op index {index} outside 0..{n - 1}")
        return cls(bits=tuple(1 if i == index else 0 for i in range(n)))

    @classmethod
    def from_active(cls, active: Iterable[int], n: int) -> "OpMask":
        idx = set(active)
        if any(not 0 <= i < n for i in idx):
            raise ValueError(f"active indices {sorted(idx)} outside 0..{n - 1}")
        return cls(bits=tuple(1 if i in idx else 0 for i in range(n)))

    def active(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    @property
    def count(self) -> int:
        return sum(self.bits)

    def is_full(self) -> bool:
        return all(self.bits)

    def is_singleton(self) -> bool:
        return self.count == 1

    def union(self, other: "OpMask") -> "OpMask":
        if len(self.bits) != len(other.bits):
            raise ValueError("cannot union masks of different lengths")
        return OpMask(bits=tuple(a | b for a, b in zip(self.bits, other.bits)))


def _canonical_id(masks: Sequence[OpMask]) -> str:
    return "|".join(".".join(str(i) for i in m.active()) for m in masks)


@dataclass(frozen=True)
class SubSupernet:
    """Per-layer operation masks carving out a region of the search space."""

    space: SpaceSpec
    masks: tuple[OpMask, ...]
    id: str = field(default="")

    def __post_init__(self):
        object.__setattr__(self, "masks", tuple(self.masks))
        if len(self.masks) != self.space.num_layers:
            raise ValueError(
                f"{len(self.masks)} masks for a {self.space.num_layers}-layer space"
            )
        for l, mask in enumerate(self.masks):
            if len(mask.bits) != self.space.op_count(l):
                raise ValueError(
                    f"layer {l}: mask width {len(mask.bits)} != "
                    f"{self.space.op_count(l)} ops"
                )
        if not self.id:
            object.__setattr__(self, "id", _canonical_id(self.masks))

    @classmethod
    def full(cls, space: SpaceSpec) -> "SubSupernet":
        return cls(space=space, masks=tuple(OpMask.full(space.op_count(l)) for l in range(space.num_layers)))

    def with_mask(self, layer: int, mask: OpMask) -> "SubSupernet":
        masks = list(self.masks)
        masks[layer] = mask
        return SubSupernet(space=self.space, masks=tuple(masks))


def subnet_count(sub: SubSupernet) -> int:
    """Number of concrete architectures inside the sub-supernet."""
    return math.prod(m.count for m in sub.masks)


def split_layer(sub: SubSupernet, layer: int) -> list[SubSupernet]:
    """One singleton sub-supernet per active operation at an unpartitioned layer."""
    if not 0 <= layer < sub.space.num_layers:
        raise ValueError(f"layer {layer} outside 0..{sub.space.num_layers - 1}")
    if not sub.masks[layer].is_full():
        raise AlreadySplitError(
            f"layer {layer} mask {sub.masks[layer].bits} is already partitioned"
        )
    n = sub.space.op_count(layer)
    return [sub.with_mask(layer, OpMask.singleton(i, n)) for i in range(n)]


def merge_group(subs: Sequence[SubSupernet], layer: int) -> SubSupernet:
    """Union the given layer's singleton masks; all other layers must agree."""
    if not subs:
        raise ValueError("nothing to merge")
    first = subs[0]
    for sub in subs:
        if sub.space != first.space:
            raise IncompatibleSubsError("sub-supernets come from different spaces")
        if not sub.masks[layer].is_singleton():
            raise IncompatibleSubsError(
                f"layer {layer} mask {sub.masks[layer].bits} is not a singleton"
            )
        for l, (a, b) in enumerate(zip(sub.masks, first.masks)):
            if l != layer and a != b:
                raise IncompatibleSubsError(
                    f"inputs differ at layer {l}, outside the merge layer {layer}"
                )
    merged = first.masks[layer]
    for sub in subs[1:]:
        merged = merged.union(sub.masks[layer])
    return first.with_mask(layer, merged)


def contains(sub: SubSupernet, arch: Sequence[int]) -> bool:
    """True iff every chosen operation's bit is set in the sub-supernet."""
    choices = tuple(int(c) for c in arch)
    if len(choices) != sub.space.num_layers:
        raise SpecMismatchError(
            f"encoding length {len(choices)} != {sub.space.num_layers} layers"
        )
    for l, c in enumerate(choices):
        if not 0 <= c < sub.space.op_count(l):
            raise UnknownOpError(f"layer {l}: op index {c} outside the space")
        if not sub.masks[l].bits[c]:
            return False
    return True


def enumerate_subnets(sub: SubSupernet) -> Iterator[tuple[int, ...]]:
    """All architecture encodings inside the sub-supernet, layer-0-major order."""
    return itertools.product(*(m.active() for m in sub.masks))


# --- encoding strings -----------------------------------------------------

def format_encoding(choices: Sequence[int]) -> str:
    return "-".join(str(int(c)) for c in choices)


def parse_encoding(text: str, space: SpaceSpec) -> tuple[int, ...]:
    """Parse a dash-joined index string, validating it against the space."""
    parts = text.strip().split("-")
    try:
        choices = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ValueError(f"non-numeric encoding {text!r}") from exc
    if len(choices) != space.num_layers:
        raise SpecMismatchError(
            f"encoding {text!r} has {len(choices)} entries for a "
            f"{space.num_layers}-layer space"
        )
    for l, c in enumerate(choices):
        if not 0 <= c < space.op_count(l):
            raise UnknownOpError(
                f"encoding {text!r}: op index {c} invalid at layer {l} "
                f"({space.op_count(l)} ops)"
            )
    return choices
