"""Supernet partitioning by layer-wise local intrinsic dimension.

The package estimates the intrinsic dimension of layer representations,
groups a search space's candidate operations by the similarity of their
dimension profiles, recursively partitions the supernet into sub-supernets,
and searches the resulting leaves evolutionarily against a tabular
accuracy benchmark.
"""
from .errors import LidPartError
from .evolution import (
    EvoConfig,
    SearchHistory,
    TabularBenchmark,
    best_architecture,
    evolve,
    load_benchmark,
    write_history_csv,
)
from .lid import DEFAULT_K, LayerLid, knn_distances, layer_lid, mle_lid, synth_manifold
from .metrics import correlation_report, emit_profile_csv, kendall_tau, spearman_rho
from .partition import (
    EPSILON,
    PartitionHooks,
    PartitionResult,
    PartitionTree,
    best_balanced_bipartition,
    evaluate_split,
    lid_similarity,
    run_partition,
    separability_score,
    similarity_matrix,
    split_supernet,
    sub_supernet_lid_profile,
)
from .providers import compose_layer_output, file_source, synthetic_source
from .space import (
    OpMask,
    SpaceSpec,
    SubSupernet,
    contains,
    enumerate_subnets,
    format_encoding,
    load_space,
    merge_group,
    nasbench201_space,
    parse_encoding,
    split_layer,
    subnet_count,
)
from .tensorio import load_manifest, read_tensor, write_manifest, write_tensor

# The on-disk loader names mirror the container verbs used elsewhere.
load_tensor = read_tensor
store_tensor = write_tensor

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_K",
    "EPSILON",
    "EvoConfig",
    "LayerLid",
    "LidPartError",
    "OpMask",
    "PartitionHooks",
    "PartitionResult",
    "PartitionTree",
    "SearchHistory",
    "SpaceSpec",
    "SubSupernet",
    "TabularBenchmark",
    "best_architecture",
    "best_balanced_bipartition",
    "compose_layer_output",
    "contains",
    "correlation_report",
    "emit_profile_csv",
    "enumerate_subnets",
    "evaluate_split",
    "evolve",
    "file_source",
    "format_encoding",
    "kendall_tau",
    "knn_distances",
    "layer_lid",
    "lid_similarity",
    "load_benchmark",
    "load_manifest",
    "load_space",
    "load_tensor",
    "merge_group",
    "mle_lid",
    "nasbench201_space",
    "parse_encoding",
    "read_tensor",
    "run_partition",
    "separability_score",
    "similarity_matrix",
    "spearman_rho",
    "split_layer",
    "split_supernet",
    "store_tensor",
    "sub_supernet_lid_profile",
    "subnet_count",
    "synth_manifold",
    "synthetic_source",
    "write_history_csv",
    "write_manifest",
    "write_tensor",
]
