"""Exception hierarchy shared by all nemsim modules."""


class NemsimError(Exception):
    """Base class for all simulator errors."""


class InvalidGeometryError(NemsimError):
    """A device geometry violates its physical invariants."""


class CalibrationError(NemsimError):
    """A calibration input is infeasible (e.g. pull-out gap below the dielectric floor)."""


class DisplacementRangeError(NemsimError):
    """Beam displacement outside [0, g0]."""


class ConvergenceError(NemsimError):
    """A nonlinear solve failed to converge.

    Carries enough context (bracket or island id, residual, tolerance) to
    reproduce the failure.
    """

    def __init__(self, message: str, *, residual: float | None = None,
                 tolerance: float | None = None):
        super().__init__(message)
        self.residual = residual
        self.tolerance = tolerance


class StiffnessError(NemsimError):
    """Transient integrator step size underflowed; carries the failure time."""

    def __init__(self, message: str, *, t: float):
        super().__init__(message)
        self.t = t


class NetworkError(NemsimError):
    """Malformed network: unknown node, dangling element, missing ground, pin conflict."""


class ConfigError(NemsimError):
    """Invalid experiment configuration (e.g. V_DC not above pull-in)."""


class NoLatchError(NemsimError):
    """Sampling failed: a beam that must latch in the sample phase stayed released."""


class NoReleaseError(NemsimError):
    """Input out of dynamic range: a beam stayed latched in the hold phase."""


class ScenarioError(NemsimError):
    """Scenario text rejected. ``kind`` is one of syntax-error, unknown-key,
    unit-violation, constraint-violation; ``line`` is 1-based when known."""

    def __init__(self, kind: str, message: str, line: int | None = None):
        super().__init__(message)
        self.kind = kind
        self.line = line

    def __str__(self) -> str:
        loc = f" (line {self.line})" if self.line is not None else ""
        return f"{self.kind}{loc}: {self.args[0]}"
