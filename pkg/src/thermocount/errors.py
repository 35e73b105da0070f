"""Exception types raised across the package."""


class ThermoCountError(Exception):
    """Base class for all errors raised by this package."""


class NotMixing(ThermoCountError):
    """The transition matrix has no positive power up to A**2."""


class EmptyRowOrColumn(ThermoCountError):
    """A letter has no successor or no predecessor."""


class ShiftMismatch(ThermoCountError):
    """Objects built on different shifts were combined."""


class DepthTooShallow(ThermoCountError):
    """A stored word is too short for the requested potential depth."""


class NonConvergence(ThermoCountError):
    """An iterative eigen-solver failed to reach its residual target."""


class BracketFail(ThermoCountError):
    """A root could not be bracketed."""


class RootBracketFail(BracketFail):
    """Curve tracing could not bracket q(s)."""


class OutsideGradientRange(ThermoCountError):
    """Newton inversion of the pressure gradient did not converge."""


class SlopeOutOfRange(ThermoCountError):
    """Requested slope lies outside the traced slope interval."""


class BudgetExceeded(ThermoCountError):
    """Enumeration visited more nodes than the configured budget."""

    def __init__(self, message, nodes=0, partial=None):
        super().__init__(message)
        self.nodes = nodes
        self.partial = partial


class InsufficientData(ThermoCountError):
    """Too few positive counts for a growth-rate fit."""


class Inconclusive(ThermoCountError):
    """The divergence heuristic could not separate the two regimes."""


class NotPositiveDefinite(ThermoCountError):
    """A Hessian that must be positive definite is not."""


class GridTooCoarse(ThermoCountError):
    """Quadrature grid does not resolve the Gaussian width."""


class ConfigError(ThermoCountError):
    """Invalid scenario configuration."""
