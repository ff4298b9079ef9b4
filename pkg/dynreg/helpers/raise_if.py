"""dynreg/dynreg/helpers/raise_if.py.

Exceptions of dynreg and small wrapper functions that raise them.
Every exception refines the builtin a caller would catch anyway.
"""

import numpy as np


class ScheduleDomainError(ValueError):
    """Parameter schedule evaluated outside its valid range."""


class DimensionError(ValueError):
    """Array dimensions do not match the operator or trajectory."""


class ProperError(ValueError):
    """Function is +inf everywhere, or data is empty."""


class PreconditionError(ValueError):
    """Input violates a stated precondition, such as a seminorm axiom."""


class UnsupportedError(NotImplementedError):
    """Operation is not available for this input or mode."""


class AssemblyError(ValueError):
    """Finite element assembly failed, e.g. on a degenerate triangle."""


class SolverError(RuntimeError):
    """Linear solve failed or step sizes are not admissible."""


class ConvergenceError(RuntimeError):
    """Iteration cap reached. `residual` holds the last residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ExperimentError(RuntimeError):
    """A harness run failed. Carries the noise level and frame."""

    def __init__(self, message, delta=None, frame=None):
        super().__init__(message)
        self.delta = delta
        self.frame = frame


def dimension_mismatch(expected, got, what="array"):
    """Raises DimensionError if sizes differ.

    Parameters
    -----------
    expected: int or tuple
    got: int or tuple
    what: str

    Returns
    --------
    None
    """
    if tuple(np.atleast_1d(expected)) != tuple(np.atleast_1d(got)):
        raise DimensionError(
                f"{what} has size {got}, but {expected} is expected."
        )


def not_positive(value, what="value"):
    """Raises ValueError unless value > 0."""
    if not np.all(np.asarray(value) > 0):
        raise ValueError(f"{what} should be positive, got {value}.")


def invalid_inherited_attr(func, qualname, property_=False):
    """Returns a function that would behave the same as given function, but
    would raise AttributeError. This needs to be defined in class level.

    Parameters
    -----------
    func: function
    qualname: str
    property_: bool
      is this function a property?

    Returns
    --------
    raiser: function
    """

    def raiser(self, *args, **kwargs):
        raise AttributeError(
                f"{func.__name__} is not supported from {qualname} "
                "and its subclasses thereof."
        )

    if property_:
        return property(raiser)

    return raiser
