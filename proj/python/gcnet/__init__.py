"""Ghost-connectivity pruning on small CNNs."""

from ._gcnet import (
    Config,
    GcnetError,
    Result,
    activation_matrix,
    connectivity,
    connectivity_flops,
    mask_per_layer,
    merge_skip,
    prune_count,
    run_experiment,
    theory_g_scores,
)

__all__ = [
    "Config",
    "GcnetError",
    "Result",
    "activation_matrix",
    "connectivity",
    "connectivity_flops",
    "mask_per_layer",
    "merge_skip",
    "prune_count",
    "run_experiment",
    "theory_g_scores",
]
