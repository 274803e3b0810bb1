"""Time-domain supersymmetry for Dirac fields with a time-dependent mass.

Modules: ``profiles`` (m(t), superpotentials), ``operators`` (discrete
supercharges), ``dynamics`` (mode-function solvers), ``approx`` (closed-form
limits), ``oscillation`` (mixing and probabilities), ``spatial`` (spinor
ansatz check), ``units`` and ``cli``.
"""

from .errors import (ConfigError, DomainError, ExtremeHierarchyError, NumericalError, PoleError,
                     TsusyError)
from .profiles import MassProfile, parse_profile_spec, superpotentials

__version__ = "0.1.0"

__all__ = ["MassProfile", "parse_profile_spec", "superpotentials", "TsusyError", "ConfigError",
           "DomainError", "NumericalError", "PoleError", "ExtremeHierarchyError", "__version__"]
