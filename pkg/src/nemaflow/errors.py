"""Structured error types shared across the package.

Every failure mode that callers are expected to handle gets its own class
with the offending quantities attached as attributes, so batch drivers can
report precisely without parsing messages.
"""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for all structured errors raised by this package."""


class ConfigError(SimulationError):
    """Invalid or inconsistent configuration input (bad key, bad value)."""


class ShapeError(SimulationError):
    """Array shape or grid mismatch between operands."""


class NonFiniteError(SimulationError):
    """NaN or Inf encountered where a finite value is required."""

    def __init__(self, message: str, where: str = "", point=None):
        super().__init__(message)
        self.where = where
        self.point = point


class BoundaryDataError(SimulationError):
    """Boundary data missing, incompatible with initial data, or ill-typed."""


class CflViolationError(SimulationError):
    """Time step exceeds a stability limit.  No silent substepping."""

    def __init__(self, kind: str, dt: float, limit: float):
        super().__init__(f"{kind} CFL violated: dt={dt:g} exceeds limit {limit:g}")
        self.kind = kind
        self.dt = dt
        self.limit = limit


class SolverConvergenceError(SimulationError):
    """Iterative solver failed to reach its tolerance."""

    def __init__(self, solver: str, iterations: int, residual: float, tol: float):
        super().__init__(
            f"{solver} did not converge: residual {residual:.3e} after "
            f"{iterations} iterations (tol {tol:.3e})"
        )
        self.solver = solver
        self.iterations = iterations
        self.residual = residual
        self.tol = tol


class LatticeError(SimulationError):
    """A time shift or query point does not lie on the sample lattice."""

    def __init__(self, message: str, value: float = 0.0, delta: float = 0.0):
        super().__init__(message)
        self.value = value
        self.delta = delta


class WindowError(SimulationError):
    """A windowed norm was requested on a series shorter than one window."""


class InfeasibleError(SimulationError):
    """A certificate could not be established on the given sample set."""

    def __init__(self, message: str, worst_index: int = -1, violation: float = 0.0):
        super().__init__(message)
        self.worst_index = worst_index
        self.violation = violation


class StepAborted(SimulationError):
    """A time integration aborted mid-run.

    The partial trajectory accumulated so far is retained on the exception
    (``partial``) and flagged, so drivers can archive it before exiting.
    """

    def __init__(self, cause: Exception, partial=None, step_index: int = -1):
        super().__init__(f"run aborted at step {step_index}: {cause}")
        self.cause = cause
        self.partial = partial
        self.step_index = step_index
