"""
Exceptions for computational failures. Argument problems use ValueError.
"""


class ParrondoError(RuntimeError):
    """Base class for failures of an exact or Monte Carlo computation."""


class StructuralError(ParrondoError):
    """Support graph does not have exactly one closed, aperiodic class."""


class NonUniqueStationaryError(ParrondoError):
    """The kernel appears to admit more than one stationary distribution."""


class ConvergenceError(ParrondoError):
    """An iterative solver hit its iteration cap."""


class FormulaMismatchError(ParrondoError):
    """Two mean-profit formulas that must agree did not."""
