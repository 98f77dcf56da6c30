"""Capture per-(layer, op) activation batches from a supernet via forward hooks.

``export_activations`` runs one deterministic forward pass, records each
candidate operation's output, flattens every sample row-major to width
C*H*W, and writes one tensor container per (layer, op) plus a manifest.
Re-running with the same model file and input spec reproduces the blobs
byte for byte.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .containers import ExportEntry, ExportManifest, write_manifest, write_tensor
from .errors import HookFailure, ShapeDrift


@dataclass(frozen=True)
class InputSpec:
    """A deterministic Gaussian input batch, identified by its seed."""

    batch: int
    seed: int = 0

    def __post_init__(self):
        if self.batch < 1:
            raise ValueError(f"batch {self.batch} must be positive")

    def realize(self, input_shape) -> torch.Tensor:
        gen = torch.Generator().manual_seed(self.seed)
        return torch.randn((self.batch, *input_shape), generator=gen)

    def describe(self) -> str:
        return f"torch.randn(batch={self.batch}, seed={self.seed})"


def load_space_grid(path) -> list[tuple[str, tuple[str, ...]]]:
    """Read the searchable grid from a space description file.

    The file is JSON of the form ``{"layers": [{"name", "ops"}, ...]}``;
    only the grid shape matters here.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        return [
            (str(layer["name"]), tuple(str(o) for o in layer["ops"]))
            for layer in data["layers"]
        ]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"{path}: malformed space description: {exc}") from exc


def _check_grid(model: nn.Module, grid) -> None:
    layers = getattr(model, "search_layers", None)
    if layers is None:
        raise ValueError("model exposes no search_layers attribute")
    if len(layers) != len(grid):
        raise ValueError(
            f"model has {len(layers)} searchable layers, space declares {len(grid)}"
        )
    for i, ((name, ops), slot) in enumerate(zip(grid, layers)):
        if len(slot) != len(ops):
            raise ValueError(
                f"layer {i} ({name!r}): model has {len(slot)} ops, "
                f"space declares {len(ops)}"
            )


def capture_op_outputs(
    model: nn.Module, inputs: torch.Tensor
) -> dict[tuple[int, int], np.ndarray]:
    """One forward pass; returns flattened (batch, width) float arrays per slot.

    Every sample is flattened row-major over its trailing dimensions
    (channel, height, width for image models).  A slot whose module never
    fires, returns a non-tensor, drops samples, or produces non-finite
    values raises HookFailure; slots of one layer disagreeing in flattened
    width raise ShapeDrift.
    """
    recorded: dict[tuple[int, int], torch.Tensor] = {}
    handles = []
    try:
        for i, ops in enumerate(model.search_layers):
            for j, op in enumerate(ops):

                def hook(module, args, output, key=(i, j)):
                    recorded[key] = output

                handles.append(op.register_forward_hook(hook))
        model.eval()
        with torch.no_grad():
            model(inputs)
    finally:
        for h in handles:
            h.remove()

    batch = inputs.shape[0]
    flat: dict[tuple[int, int], np.ndarray] = {}
    for i, ops in enumerate(model.search_layers):
        widths = []
        for j in range(len(ops)):
            key = (i, j)
            out = recorded.get(key)
            if out is None:
                raise HookFailure(f"layer {i} op {j}: never invoked by forward()")
            if not isinstance(out, torch.Tensor):
                raise HookFailure(
                    f"layer {i} op {j}: output is {type(out).__name__}, not a tensor"
                )
            if out.ndim < 2 or out.shape[0] != batch:
                raise HookFailure(
                    f"layer {i} op {j}: output shape {tuple(out.shape)} does not "
                    f"lead with the batch of {batch}"
                )
            arr = out.detach().cpu().contiguous().numpy().reshape(batch, -1)
            if not np.all(np.isfinite(arr)):
                raise HookFailure(f"layer {i} op {j}: output contains non-finite values")
            widths.append(arr.shape[1])
            flat[key] = arr
        if len(set(widths)) > 1:
            raise ShapeDrift(f"layer {i}: flattened widths {widths} disagree")
    return flat


def export_activations(
    model: nn.Module,
    space_path,
    input_spec: InputSpec,
    out_dir,
) -> ExportManifest:
    """Export one blob per (layer, op) and a manifest into ``out_dir``."""
    grid = load_space_grid(space_path)
    _check_grid(model, grid)
    inputs = input_spec.realize(model.input_shape)
    flat = capture_op_outputs(model, inputs)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for (i, j), arr in sorted(flat.items()):
        name = f"layer{i}_op{j}.lidt"
        write_tensor(out_dir / name, arr)
        entries.append(ExportEntry(layer=i, op=j, path=name))
    manifest = ExportManifest(
        batch=input_spec.batch,
        data_source=input_spec.describe(),
        entries=tuple(entries),
    )
    write_manifest(out_dir / "manifest.json", manifest)
    return manifest
