"""Writers for the shared on-disk formats.

The estimator side of the pipeline reads two artifact kinds, and this module
produces both from scratch so the exporter stays decoupled from that codebase:

Tensor container (little-endian throughout)::

    magic   4 bytes  b"LIDT"
    version u16      currently 1
    dtype   u8       0 = float32
    ndim    u8
    dims    ndim x u64
    payload prod(dims) values, row-major

Manifest (JSON): ``{"batch": int, "entries": [{"layer", "op", "path"}, ...]}``
with entry paths relative to the manifest's own directory.  Extra top-level
keys carry export metadata (data source, flattening order, capture point);
readers of the required schema ignore them.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"LIDT"
VERSION = 1
FLOAT32_CODE = 0
_HEAD = struct.Struct("<4sHBB")

# Fixed per-sample flattening order, recorded in every manifest.
FLATTEN_ORDER = "row-major over (channel, height, width)"
CAPTURE_POINT = "post-activation operation outputs, before the layer sum"


def write_tensor(path, array) -> None:
    """Serialize an array as a version-1 float32 container."""
    arr = np.ascontiguousarray(array, dtype="<f4")
    if arr.ndim == 0 or arr.ndim > 255:
        raise ValueError(f"cannot serialize a {arr.ndim}-d array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"refusing to write non-finite values to {path}")
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, FLOAT32_CODE, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.tobytes())


@dataclass(frozen=True)
class ExportEntry:
    """One captured (layer, op) batch and its blob path relative to the manifest."""

    layer: int
    op: int
    path: str


@dataclass(frozen=True)
class ExportManifest:
    batch: int
    data_source: str
    entries: tuple[ExportEntry, ...]

    def __post_init__(self):
        if self.batch < 1:
            raise ValueError(f"batch {self.batch} must be positive")
        seen = set()
        for e in self.entries:
            key = (e.layer, e.op)
            if key in seen:
                raise ValueError(f"duplicate manifest entry for {key}")
            seen.add(key)


def write_manifest(path, manifest: ExportManifest) -> None:
    payload = {
        "batch": int(manifest.batch),
        "data_source": manifest.data_source,
        "flatten_order": FLATTEN_ORDER,
        "capture": CAPTURE_POINT,
        "entries": [
            {"layer": int(e.layer), "op": int(e.op), "path": e.path}
            for e in manifest.entries
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
