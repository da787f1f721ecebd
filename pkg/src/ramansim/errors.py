"""Exception types shared across the package."""


class RamanSimError(Exception):
    """Base class for all package errors."""


class GridMismatchError(RamanSimError, ValueError):
    """Sample counts, grids or bandwidths are inconsistent."""


class DomainError(RamanSimError, ValueError):
    """An envelope is in the wrong (time vs frequency) domain."""


class ParameterError(RamanSimError, ValueError):
    """A parameter is outside its allowed range."""


class DivergenceError(RamanSimError, ArithmeticError):
    """The propagation blew up; ``slice_index`` names the x slice."""

    def __init__(self, message, slice_index=None, tau_index=None, trial_index=None):
        super().__init__(message)
        self.slice_index = slice_index
        self.tau_index = tau_index
        self.trial_index = trial_index


class NumericError(DivergenceError):
    """A non-finite sample appeared during propagation."""


class UndefinedAsymmetryError(RamanSimError, ZeroDivisionError):
    """Mode asymmetry requested for two zero energies."""


class ConfigError(RamanSimError, ValueError):
    """Bad configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
