"""Binary tensor container and batch manifest.

Container layout (little-endian throughout)::

    magic   4 bytes  b"LIDT"
    version u16      currently 1
    dtype   u8       0 = float32
    ndim    u8
    dims    ndim x u64
    payload prod(dims) values, row-major

A manifest is a JSON file ``{"batch": int, "entries": [...]}`` where each
entry carries a layer index, an operation index, and a container path
relative to the manifest's own directory.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    MissingEntryError,
    NonFiniteValueError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
    UnsupportedVersionError,
)

MAGIC = b"LIDT"
VERSION = 1
_DTYPE_CODES = {0: np.dtype("<f4")}
_HEAD = struct.Struct("<4sHBB")


def write_tensor(path, array) -> None:
    """Serialize an array as a version-1 float32 container."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim == 0 or arr.ndim > 255:
        raise ValueError(f"cannot serialize a {arr.ndim}-d array")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError(f"refusing to write non-finite values to {path}")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, 0, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a container back into a float32 array, validating the header."""
    blob = Path(path).read_bytes()
    if len(blob) < _HEAD.size:
        raise TruncatedPayloadError(f"{path}: file shorter than the fixed header")
    magic, version, dtype_code, ndim = _HEAD.unpack_from(blob, 0)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: magic {magic!r} != {MAGIC!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: version {version} (expected {VERSION})")
    if dtype_code not in _DTYPE_CODES:
        raise UnsupportedDtypeError(f"{path}: unknown dtype code {dtype_code}")
    if ndim == 0:
        raise TruncatedPayloadError(f"{path}: zero-dimensional header")
    dims_end = _HEAD.size + 8 * ndim
    if len(blob) < dims_end:
        raise TruncatedPayloadError(f"{path}: header truncated inside dims")
    dims = struct.unpack(f"<{ndim}Q", blob[_HEAD.size:dims_end])
    dtype = _DTYPE_CODES[dtype_code]
    expected = dims_end + int(np.prod(dims, dtype=np.uint64)) * dtype.itemsize
    if len(blob) != expected:
        raise TruncatedPayloadError(
            f"{path}: {len(blob)} bytes on disk, header promises {expected}"
        )
    arr = np.frombuffer(blob[dims_end:], dtype=dtype).reshape(dims)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValueError(f"{path}: payload contains non-finite values")
    return arr.copy()


@dataclass(frozen=True)
class ManifestEntry:
    layer: int
    op: int
    path: Path


@dataclass(frozen=True)
class Manifest:
    batch: int
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        if self.batch < 1:
            raise ValueError(f"batch {self.batch} must be positive")
        seen = set()
        for e in self.entries:
            key = (e.layer, e.op)
            if key in seen:
                raise ValueError(f"duplicate manifest entry for {key}")
            seen.add(key)

    def lookup(self, layer: int, op: int) -> Path:
        for e in self.entries:
            if e.layer == layer and e.op == op:
                return e.path
        raise MissingEntryError(f"no tensor recorded for layer {layer} op {op}")


def load_manifest(path) -> Manifest:
    """Read a manifest, resolving entry paths against its directory."""
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    try:
        batch = int(data["batch"])
        entries = tuple(
            ManifestEntry(
                layer=int(e["layer"]),
                op=int(e["op"]),
                path=(path.parent / e["path"]).resolve(),
            )
            for e in data["entries"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed manifest: {exc}") from exc
    return Manifest(batch=batch, entries=entries)


def write_manifest(path, batch: int, entries) -> None:
    """Write a manifest; entry paths are stored relative to the manifest."""
    path = Path(path)
    payload = {
        "batch": int(batch),
        "entries": [
            {"layer": int(e.layer), "op": int(e.op), "path": str(Path(e.path))}
            for e in entries
        ],
    }
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
