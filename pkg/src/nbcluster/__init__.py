"""Community detection in the sparse two-community block model by weighted
non-backtracking path counts."""

__version__ = "0.1.0"

from .sbm import (LabelledGraph, SbmParams, ball, make_rng, overlap, read_edge_list, read_labels,
                  sample_sbm, sphere, write_edge_list, write_labels)
from .engine import nb_matvec, pair_statistic
from .algorithm import (AlgoParams, ClusterDiagnostics, ThresholdError, choose_anchor, cluster,
                        cluster_simple, derive_params)
from .branching import calibrate_kappa, sample_psi_batch

__all__ = [
    "AlgoParams", "ClusterDiagnostics", "LabelledGraph", "SbmParams", "ThresholdError", "ball",
    "calibrate_kappa", "choose_anchor", "cluster", "cluster_simple", "derive_params", "make_rng",
    "nb_matvec", "overlap", "pair_statistic", "read_edge_list", "read_labels", "sample_psi_batch",
    "sample_sbm", "sphere", "write_edge_list", "write_labels",
]
