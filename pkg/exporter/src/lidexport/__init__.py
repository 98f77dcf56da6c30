"""Dump per-(layer, op) activation batches from a torch supernet.

The exporter hooks every candidate operation of a weight-sharing supernet,
runs one deterministic forward pass, and writes each captured batch as a
tensor container plus a manifest that the estimation pipeline's file-backed
source consumes directly.
"""
from .capture import InputSpec, capture_op_outputs, export_activations, load_space_grid
from .containers import ExportEntry, ExportManifest, write_manifest, write_tensor
from .errors import ExportError, HookFailure, ShapeDrift
from .models import ToySupernet, load_model, make_toy_supernet, save_model

__version__ = "0.1.0"

__all__ = [
    "ExportEntry",
    "ExportError",
    "ExportManifest",
    "HookFailure",
    "InputSpec",
    "ShapeDrift",
    "ToySupernet",
    "capture_op_outputs",
    "export_activations",
    "load_model",
    "load_space_grid",
    "make_toy_supernet",
    "save_model",
    "write_manifest",
    "write_tensor",
]
