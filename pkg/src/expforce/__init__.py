"""Expected Force spreading-power metric and epidemic validation harness."""

__version__ = "0.1.0"

from .centrality import eigenvector_centrality, k_shell
from .epidemic import (GammaFit, OutbreakRecord, SimParams, calibrate_beta, epidemic_potential,
                       fit_gamma, simulate_recovery_continuous, simulate_recovery_discrete,
                       simulate_si_continuous, tthc_outcome)
from .exf import (ExfOptions, TransmissionCluster, enumerate_clusters, exf_all, expected_force,
                  expected_force_modified)
from .graph import Ball, Graph, ball, giant_component, largest_eigenvalue, load_edge_list, read_graph
from .scores import NodeScores
from .stats import pearson, spearman

__all__ = [
    "Ball", "ExfOptions", "GammaFit", "Graph", "NodeScores", "OutbreakRecord", "SimParams",
    "TransmissionCluster", "ball", "calibrate_beta", "eigenvector_centrality", "enumerate_clusters",
    "epidemic_potential", "exf_all", "expected_force", "expected_force_modified", "fit_gamma",
    "giant_component", "k_shell", "largest_eigenvalue", "load_edge_list", "pearson", "read_graph",
    "simulate_recovery_continuous", "simulate_recovery_discrete", "simulate_si_continuous",
    "spearman", "tthc_outcome",
]
