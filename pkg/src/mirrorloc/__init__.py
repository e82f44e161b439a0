"""Dynamical localization of a modulated optomechanical mirror.

Classical (ensemble) and quantum (split-operator) dynamics under the driven
effective Hamiltonian, plus the analysis used to compare them.
"""

from .model import EffectiveModel
from .params import DimensionlessParams, PhysicalParams, canonical_defaults

__all__ = ["EffectiveModel", "DimensionlessParams", "PhysicalParams", "canonical_defaults"]
__version__ = "0.1.0"
