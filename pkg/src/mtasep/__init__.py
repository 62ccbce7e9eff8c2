"""Multi-type ASEP stationary distributions: exact laws and samplers.

The package computes stationary distributions of the multi-type
asymmetric simple exclusion process on a ring by four independent
routes (queue-weight sums, operator traces, a brute-force generator
solve, and direct stacked-queue sampling), plus the line-queue
constructions behind the clustering statistics.
"""

from .lineq import (EquilibriumPi, LineQueueParams, TandemParams,
                    clustering_densities, clustering_quadrature,
                    convoy_walk, equilibrium_pi, pair_correlations,
                    q_series_identity_check, queue_transition_matrix,
                    sample_line_config, tilted_pi)
from .matprod import (build_X, check_fundamental_relations,
                      stationary_distribution_trace,
                      stationary_weight_trace)
from .oracle import (build_generator, solve_stationary,
                     stationary_distribution, total_variation)
from .qpoly import QPoly, QRational, common_denominator, qfact, qint
from .ring import (HOLE, ParticleCounts, RingConfig, WindowConfig,
                   arrangements)
from .sampler import (MultiLineDiagram, assign_departures, kernel_in_use,
                      qmin_from_marks, sample_marks, sample_multitype)
from .weights import (departure_process, exact_departure_distribution,
                      total_weight, weight_sum_exact, weight_sum_truncated)

__version__ = "0.1.0"

__all__ = [
    "EquilibriumPi", "HOLE", "LineQueueParams", "MultiLineDiagram",
    "ParticleCounts", "QPoly", "QRational", "RingConfig", "TandemParams",
    "WindowConfig", "arrangements", "assign_departures", "build_X",
    "build_generator", "check_fundamental_relations",
    "clustering_densities", "clustering_quadrature", "common_denominator",
    "convoy_walk", "departure_process", "equilibrium_pi",
    "exact_departure_distribution", "kernel_in_use", "pair_correlations",
    "q_series_identity_check", "qfact", "qint", "qmin_from_marks",
    "queue_transition_matrix", "sample_line_config", "sample_marks",
    "sample_multitype", "solve_stationary", "stationary_distribution",
    "stationary_distribution_trace", "stationary_weight_trace",
    "tilted_pi", "total_variation", "total_weight", "weight_sum_exact",
    "weight_sum_truncated",
]
