class ThinHomogError(Exception):
    """Base class for every error raised by thinhomog."""


class DomainError(ThinHomogError, ValueError):
    """A point or a geometry lies outside the admissible set."""


class ResolutionError(ThinHomogError, ValueError):
    """The grid does not resolve the fastest boundary oscillation."""

    def __init__(self, message, required_nodes):
        super().__init__(message)
        self.required_nodes = required_nodes


class SolverError(ThinHomogError, RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class AssemblyError(ThinHomogError, RuntimeError):
    """A discrete system is singular or otherwise unusable."""


class RegimeError(ThinHomogError, ValueError):
    """The requested homogenization regime does not match the profiles."""


class AccuracyError(ThinHomogError, ArithmeticError):
    """An averaging procedure did not reach the requested accuracy."""

    def __init__(self, message, values=()):
        super().__init__(message)
        self.values = tuple(values)


class SpectralError(ThinHomogError, RuntimeError):
    """The Lanczos iteration failed after all restarts."""


class StudyError(ThinHomogError, RuntimeError):
    """A study guard rejected its input."""

    def __init__(self, message, epsilon=None):
        super().__init__(message)
        self.epsilon = epsilon


class InstabilityError(ThinHomogError, ArithmeticError):
    """A trajectory left the absorbing ball; the time step is too large."""


class ConfigError(ThinHomogError, ValueError):
    """A study configuration failed validation.

    Parameters
    ----------
    failures : list of (int or None, str)
        Every validation failure as (line number, message).

    """

    def __init__(self, failures):
        self.failures = list(failures)
        lines = []
        for line, msg in self.failures:
            where = f"line {line}" if line is not None else "config"
            lines.append(f"{where}: {msg}")
        super().__init__("\n".join(lines))


class PlotError(ThinHomogError, ValueError):
    """A table does not carry the columns a plot kind needs."""
