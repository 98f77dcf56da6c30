"""Exception taxonomy for the activation exporter."""
from __future__ import annotations


class ExportError(Exception):
    """Base class for every error this package raises on purpose."""


class HookFailure(ExportError):
    """An operation's output could not be captured during the forward pass."""


class ShapeDrift(ExportError):
    """Operations of one layer disagree in flattened activation width."""
