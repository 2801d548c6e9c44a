"""Exception types shared across the simulation engine."""


class HybridOscError(Exception):
    """Base class for all engine errors."""


class SingularMatrix(HybridOscError):
    """A 2x2 matrix that must be invertible has det <= 0."""


class PositiveDefinitenessLost(HybridOscError):
    """An eigenvalue of K dropped to <= 0 beyond the working tolerance.

    Signals the classical-sector quarter-period singularity or an
    integrator failure.  Carries the time at which the monitor fired.
    """

    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"K lost positive definiteness at t={t!r}")


class StepSizeUnderflow(HybridOscError):
    """The adaptive step fell below a machine-meaningful size."""

    def __init__(self, t, message=None):
        self.t = t
        super().__init__(message or f"step size underflow at t={t!r}")


class PreconditionViolated(HybridOscError):
    """Input does not satisfy a documented precondition of an oracle."""


class GridTooSmall(HybridOscError):
    """The Gaussian support does not fit the requested grid."""


class NormDrift(HybridOscError):
    """Wavefield normalization drifted beyond tolerance during evolution."""


class BoundaryLeak(HybridOscError):
    """Wavefield edge amplitude exceeded the leak threshold."""


class PhaseUnwrapFailure(HybridOscError):
    """Too much probability mass sits in near-nodal regions for reliable
    current-based momentum moments."""


class ConfigParse(HybridOscError):
    """Scenario file could not be parsed; carries line/key diagnostics."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
