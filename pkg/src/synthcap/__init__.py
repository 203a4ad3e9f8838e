"""Distributed channel synthesis: rate regions, synthesis codes and soft covering."""

from .errors import (AlphabetError, BudgetExceeded, InfeasibleError, InvalidDistribution,
                     InvariantViolation, SynthcapError)
from .prob import (Channel, JointPmf, Pmf, entropy, hypothesis_floor, information_density,
                   mutual_information, random_time_marginal, renyi_information,
                   renyi_information_bar, total_variation)

__version__ = "0.1.0"

__all__ = [
    "AlphabetError", "BudgetExceeded", "Channel", "InfeasibleError", "InvalidDistribution",
    "InvariantViolation", "JointPmf", "Pmf", "SynthcapError", "entropy", "hypothesis_floor",
    "information_density", "mutual_information", "random_time_marginal", "renyi_information",
    "renyi_information_bar", "total_variation",
]
