"""Optimal rate regions over auxiliary decompositions, with closed-form oracles."""

from .closed_form import (erasure_common_information, erasure_r0, erasure_region,
                          reverse_erasure_region, scatter_common_information, scatter_corners,
                          scatter_region, scatter_target)
from .core import (broadcast_region, limited_memory_region, local_randomness_region,
                   necessary_conditional_entropy, necessary_partition, public_channel_region,
                   synthesis_region, wyner_common_information)
from .game import game_region, product_payoff_oracle
from .optimizer import OptimizerConfig, max_boxes
from .types import AuxDecomposition, GamePoint, RatePoint, RegionBoundary, markov_residual

__all__ = [
    "AuxDecomposition", "GamePoint", "OptimizerConfig", "RatePoint", "RegionBoundary",
    "broadcast_region", "erasure_common_information", "erasure_r0", "erasure_region",
    "game_region", "limited_memory_region", "local_randomness_region", "markov_residual",
    "max_boxes", "necessary_conditional_entropy", "necessary_partition",
    "product_payoff_oracle", "public_channel_region", "reverse_erasure_region",
    "scatter_common_information", "scatter_corners", "scatter_region", "scatter_target",
    "synthesis_region", "wyner_common_information",
]
