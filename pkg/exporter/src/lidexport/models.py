"""Reference torch adapter and the model interface the exporter hooks into.

A compatible supernet is an ``nn.Module`` that exposes:

``search_layers``
    an ``nn.ModuleList`` of ``nn.ModuleList``s where ``search_layers[i][j]``
    is candidate operation *j* of searchable layer *i*.  One forward pass
    must invoke every one of these modules (weight-sharing supernets do:
    each layer's output is the sum of all its candidate outputs).

``input_shape``
    the per-sample input shape, e.g. ``(3, 8, 8)``.

The exporter attaches forward hooks to each slot module and records the
output of that slot's (last) invocation during a single forward pass.
"""
from __future__ import annotations

import torch
from torch import nn


def _conv_op(channels: int, kernel: int) -> nn.Module:
    return nn.Sequential(
        nn.Conv2d(channels, channels, kernel, padding=kernel // 2),
        nn.ReLU(),
    )


class ToySupernet(nn.Module):
    """A minimal image supernet: every layer sums its candidate op outputs.

    Layers downsample 2x after summation (except the last), so per-layer
    activation widths differ while ops within one layer always agree.
    """

    def __init__(self, num_layers: int = 2, ops_per_layer: int = 2):
        super().__init__()
        if num_layers < 1 or ops_per_layer < 1:
            raise ValueError("need at least one layer and one op per layer")
        self.input_shape = (3, 8, 8)
        channels = 4
        self.stem = nn.Sequential(nn.Conv2d(3, channels, 3, padding=1), nn.ReLU())
        self.search_layers = nn.ModuleList(
            nn.ModuleList(
                _conv_op(channels, 3 if j % 2 == 0 else 1)
                for j in range(ops_per_layer)
            )
            for _ in range(num_layers)
        )
        self.pool = nn.AvgPool2d(2)
        self.head = nn.Linear(channels, 10)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.stem(x)
        for i, ops in enumerate(self.search_layers):
            x = sum(op(x) for op in ops)
            if i + 1 < len(self.search_layers):
                x = self.pool(x)
        x = x.mean(dim=(2, 3))
        return self.head(x)


def make_toy_supernet(
    num_layers: int = 2, ops_per_layer: int = 2, seed: int = 0
) -> ToySupernet:
    """Build a toy supernet with reproducible parameter initialization."""
    torch.manual_seed(seed)
    return ToySupernet(num_layers, ops_per_layer)


def save_model(model: nn.Module, path) -> None:
    torch.save(model, path)


def load_model(path) -> nn.Module:
    model = torch.load(path, map_location="cpu", weights_only=False)
    if not isinstance(model, nn.Module):
        raise ValueError(f"{path} does not contain a torch module")
    return model
