"""Complex-time analysis of exceptional-point encircling by a chirped laser pulse.

The package locates the branch points of the quasi-energy split in the
complex time plane, evaluates their residua and assembles the first-order
survival probability, with independent numerical oracles for checking.
"""

from .model import HERMITIAN, ReducedPulseParams, PhysicalPulseParams, to_reduced
from .tpoints import classify_layout, enumerate_tps, find_central, separator_alpha
from .amplitude import survival_probability

__all__ = [
    "HERMITIAN", "ReducedPulseParams", "PhysicalPulseParams", "to_reduced",
    "classify_layout", "enumerate_tps", "find_central", "separator_alpha",
    "survival_probability",
]
__version__ = "0.1.0"
