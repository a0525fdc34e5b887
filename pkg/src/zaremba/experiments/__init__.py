"""Drivers that measure growth, run the chain certificate and the dyadic dichotomy."""

from .dichotomy import (DichotomyConfig, DichotomySeries, capacity_sum, classify_series,
                        dichotomy_run, layer_clouds)
from .growth import (GrowthResult, check_hypotheses, growth_in_layer, growth_via_barrier,
                     growth_via_capacity, layer_sup, sphere_sup)
from .iteration import ChainIterationTrace, GrowthConstants, chain_iteration

__all__ = [
    "DichotomyConfig", "DichotomySeries", "capacity_sum", "classify_series", "dichotomy_run",
    "layer_clouds", "GrowthResult", "check_hypotheses", "growth_in_layer", "growth_via_barrier",
    "growth_via_capacity", "layer_sup", "sphere_sup", "ChainIterationTrace", "GrowthConstants",
    "chain_iteration",
]
