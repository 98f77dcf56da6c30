"""Report serialization and figure rendering for pipeline runs.

Everything written here is deterministic for a fixed input: floats are
serialized via their shortest round-trip representation and figures render
through the Agg backend with fixed geometry, so repeated runs with one
config produce byte-identical files.
"""
from __future__ import annotations

import csv
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evolution import SearchHistory
from .partition import PartitionTree
from .space import subnet_count

SEPARABILITY_HEADER = ("layer_name", "D")


def partition_report(tree: PartitionTree) -> dict:
    """Tree structure with per-split layer, op groups, score, and matrices."""
    space = tree.root.sub.space

    def node_dict(node) -> dict:
        d = {
            "sub": node.sub.id,
            "depth": node.depth,
            "subnet_count": subnet_count(node.sub),
        }
        if node.decision is not None:
            dec = node.decision
            ops = space.op_names(dec.layer)
            comp = [i for i in range(len(ops)) if i not in set(dec.result.group)]
            d["split"] = {
                "layer": dec.layer,
                "layer_name": space.layers[dec.layer].name,
                "gamma": dec.result.score,
                "group": [ops[i] for i in dec.result.group],
                "complement": [ops[i] for i in comp],
                "similarity": {
                    space.layers[l].name: dec.matrices[l].tolist()
                    for l in sorted(dec.matrices)
                },
            }
            d["children"] = [node_dict(c) for c in node.children]
        return d

    return {
        "rounds": tree.rounds,
        "tree": node_dict(tree.root),
        "leaves": [
            {
                "id": leaf.id,
                "masks": [list(m.bits) for m in leaf.masks],
                "subnet_count": subnet_count(leaf),
            }
            for leaf in tree.leaves()
        ],
    }


def write_partition_report(tree: PartitionTree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(partition_report(tree), fh, indent=2)
        fh.write("\n")


def write_separability_csv(rows, path) -> None:
    """Rows of (layer_name, D)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SEPARABILITY_HEADER)
        for name, score in rows:
            writer.writerow([str(name), repr(float(score))])


def write_json(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=120)
    return fig, ax


def render_profile_figure(named_profiles, path) -> None:
    """One line per profile over relative depth."""
    fig, ax = _new_axes()
    for name, profile in named_profiles:
        values = np.asarray(profile, dtype=np.float64).ravel()
        if values.size > 1:
            depth = np.arange(values.size) / (values.size - 1)
        else:
            depth = np.zeros(1)
        ax.plot(depth, values, marker="o", markersize=3, linewidth=1.2, label=str(name))
    ax.set_xlabel("relative depth")
    ax.set_ylabel("LID")
    if named_profiles:
        ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_history_figure(history: SearchHistory, path) -> None:
    """Mean validation accuracy with a one-sigma band plus the best-so-far curve."""
    epochs = np.array([row.epoch for row in history.epochs])
    mean = np.array([row.mean_val for row in history.epochs])
    std = np.array([row.std_val for row in history.epochs])
    best = np.array([row.best_val for row in history.epochs])
    fig, ax = _new_axes()
    ax.plot(epochs, mean, linewidth=1.2, label="population mean")
    ax.fill_between(epochs, mean - std, mean + std, alpha=0.25, linewidth=0)
    ax.plot(epochs, best, linewidth=1.2, linestyle="--", label="best so far")
    ax.set_xlabel("epoch")
    ax.set_ylabel("validation accuracy")
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_separability_figure(rows, path) -> None:
    names = [str(name) for name, _ in rows]
    scores = [float(score) for _, score in rows]
    fig, ax = _new_axes()
    ax.bar(range(len(scores)), scores)
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, ha="right", fontsize=8)
    ax.set_xlabel("layer")
    ax.set_ylabel("separability D")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_gamma_figure(tree: PartitionTree, path) -> None:
    """Partition score of every split node, labelled by the chosen layer."""
    space = tree.root.sub.space
    nodes = tree.split_nodes()
    scores = [n.decision.result.score for n in nodes]
    labels = [
        f"t{n.depth + 1}: {space.layers[n.decision.layer].name}" for n in nodes
    ]
    fig, ax = _new_axes()
    ax.bar(range(len(scores)), scores)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_xlabel("split node (round: layer)")
    ax.set_ylabel("partition score")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_rank_figure(true_scores, proxy_scores, path) -> None:
    """Scatter of proxy vs. true scores for the ranked subset."""
    fig, ax = _new_axes()
    ax.scatter(true_scores, proxy_scores, s=12, alpha=0.7)
    ax.set_xlabel("test accuracy")
    ax.set_ylabel("validation accuracy")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
